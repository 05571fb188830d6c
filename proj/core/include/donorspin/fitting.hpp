#pragma once

// Weighted nonlinear least squares (Levenberg–Marquardt) and the model fits
// used on relaxation, pumping, temperature and spectral data.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace donorspin {

struct Model {
  std::string id;
  std::vector<std::string> names;
  std::function<double(std::span<const double> params, double x)> f;
  /// Optional ∂f/∂p, written into `grad` (size = names.size()).
  std::function<void(std::span<const double> params, double x, std::span<double> grad)> jacobian;
  std::vector<double> lower;  // empty → unbounded
  std::vector<double> upper;
};

struct FitOptions {
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double xtol = 1e-8;      // scaled relative step
  double gtol = 1e-10;     // ∞-norm of the scaled gradient Jᵀr
  int max_iter = 200;
  /// Cosine between r and the column space of J required for `converged`.
  double converged_gradient = 1e-6;
  /// Columns whose singular value falls below rcond·σ_max make the fit
  /// degenerate.
  double rcond = 1e-12;
};

struct FitResult {
  std::string model;
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> std_errors;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  // ‖(y − f)/σ‖₂
  double gradient_norm = 0.0;  // max_j |J_jᵀ r| / (‖J_j‖ ‖r‖), 0 at a zero residual
  bool converged = false;
  int n_iter = 0;
  int dof = 0;
  std::vector<std::string> flags;
  std::string message;

  int index(std::string_view name) const;
  double value(std::string_view name) const;
  double error(std::string_view name) const;
  bool has_flag(std::string_view flag) const;
};

/// Minimizes Σ((y − f(x))/σ)². Empty `sigma` means unit weights, in which case
/// the covariance is scaled by the reduced χ². Throws ArgumentError on bad
/// input and DegenerateFitError when JᵀJ is singular.
FitResult nlls_solve(const Model& model, std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma, std::span<const double> init,
                     const FitOptions& options = {});

/// Model behind a named fit ("exp", "decay", "dexp", "temp", "zeeman") for
/// data sampled at `x`, for use with nlls_solve and a custom starting point.
/// `field_T` and `g` are used by "temp" only.
Model fit_model(std::string_view id, std::span<const double> x, double field_T = 0.0,
                double g = 2.0);

/// y(τ) = A (1 − e^{−τ/T1}) + C. Parameters: T1, A, C.
FitResult fit_exponential_recovery(std::span<const double> tau, std::span<const double> y,
                                   std::span<const double> sigma = {});

/// y(t) = A e^{−t/τ} + C. Parameters: tau, A, C.
FitResult fit_exponential_decay(std::span<const double> t, std::span<const double> y,
                                std::span<const double> sigma = {});

/// y(t) = A_f e^{−t/t_fast} + A_s e^{−t/t_slow} + C with A_f, A_s ≥ 0 and
/// t_fast ≤ t_slow. Parameters: t_fast, t_slow, A_f, A_s, C. Falls back to a
/// single exponential (t_fast = t_slow = tau, A_f = 0, flag
/// "single_exponential_fallback") when the two constants coincide within 1%,
/// an amplitude collapses onto its bound, or the two-term fit is degenerate.
FitResult fit_double_exponential(std::span<const double> t, std::span<const double> y,
                                 std::span<const double> sigma = {});

/// T1 = a B^{−n}, fitted as ln T1 = ln a − n ln B. Parameters: a, n (fixed
/// mode reports n with zero error). `sigma` are errors on T1.
FitResult fit_power_law(std::span<const double> field_T, std::span<const double> t1,
                        std::optional<double> fixed_n = std::nullopt,
                        std::span<const double> sigma = {});

/// T1(T) = 1/(Γ (2 N_ph + 1) + Γ₀), N_ph at g μB B. Parameters (1/s):
/// gamma_down_up, gamma0. Γ₀ may be negative.
FitResult fit_temperature_model(std::span<const double> temperature_K,
                                std::span<const double> t1, double field_T, double g,
                                std::span<const double> sigma = {});

/// splitting = g_eff μB B through the origin (eV). Parameter: g_eff.
FitResult fit_zeeman_linear(std::span<const double> field_T, std::span<const double> splitting_eV,
                            std::span<const double> sigma = {});

struct LineFitOptions {
  std::vector<double> init_centers;  // eV, one per line
  double init_fwhm = 0.0;            // eV; estimated from the data when 0
};

/// Sum of pseudo-Voigt lines plus a constant background. Parameters, with
/// lines sorted by center: center_i (eV), fwhm_i (eV), amplitude_i (peak
/// height), eta_i ∈ [0, 1], then background. Flags "overlap" when two centers
/// are closer than 0.1 × the wider FWHM.
FitResult fit_spectral_lines(std::span<const double> energy, std::span<const double> intensity,
                             int n_lines, const LineFitOptions& options,
                             std::span<const double> sigma = {});

}  // namespace donorspin
