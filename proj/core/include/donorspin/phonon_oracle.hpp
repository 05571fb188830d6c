#pragma once

// Brute-force golden-rule evaluation of the one-phonon spin-flip rate.
//
// The closed-form rate in relaxation.hpp comes from averaging the admixture
// matrix elements over phonon directions analytically. Here the same rate is
// obtained by explicit summation over the three acoustic branches and a
// numerical quadrature over propagation directions ξ, with the energy
// conserving δ-function resolved per branch at q = gμB B / (ħ s).
//
// Matrix elements are reported per unit normalization volume: the phonon
// field amplitude carries sqrt(ħ / 2ρωV), so |M|²·V is volume independent.
// All quantities here are SI (J, m, s) internally.

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "donorspin/material.hpp"
#include "donorspin/quadrature.hpp"
#include "donorspin/relaxation.hpp"

namespace donorspin {

/// Wurtzite piezo tensor β_ijk (V/m). Nonzero components:
///   β_zxx = β_zyy = h31, β_zzz = h33, β_xxz = β_xzx = β_yyz = β_yzy = h15.
/// The first index couples to the field direction; the tensor is symmetric in
/// its last two (strain) indices.
struct PiezoTensor {
  double h31 = 0.0;
  double h33 = 0.0;
  double h15 = 0.0;

  static PiezoTensor from(const MaterialParameters& mat) { return {mat.h31, mat.h33, mat.h15}; }

  double operator()(int i, int j, int k) const;
  /// Row-major 3×3×3 expansion, index 9i + 3j + k.
  std::array<double, 27> full() const;
  /// The three single-constant tensors (h31 only, h33 only, h15 only).
  std::array<PiezoTensor, 3> split() const;
};

enum class Branch { Longitudinal, Transverse1, Transverse2 };

struct PhononMode {
  Branch branch = Branch::Longitudinal;
  Eigen::Vector3d xi = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d e_pol = Eigen::Vector3d::UnitZ();
  double speed = 0.0;  // m/s

  /// Checks unit norms and (trans)verse orthogonality to 1e-12.
  void validate() const;
};

/// Σ_ijk β_ijk ξ_i ξ_j e_k. Throws ArgumentError if |ξ| or |e| deviates from
/// one by more than 1e-6.
double piezo_projection(const PiezoTensor& tensor, const Eigen::Vector3d& xi,
                        const Eigen::Vector3d& e_pol);

/// Orthonormal transverse pair: Gram–Schmidt of the coordinate axis least
/// aligned with ξ, then ξ × e1; finally rotated by `angle` about ξ.
std::array<Eigen::Vector3d, 2> transverse_pair(const Eigen::Vector3d& xi, double angle = 0.0);

/// Longitudinal + two transverse modes propagating along ξ.
std::array<PhononMode, 3> phonon_modes(const Eigen::Vector3d& xi, double s_l, double s_t,
                                       double transverse_angle = 0.0);

/// (e1 e1ᵀ + e2 e2ᵀ)/2 for the default transverse pair; equals (1 − ξξᵀ)/2.
Eigen::Matrix3d transverse_average_check(const Eigen::Vector3d& xi);
Eigen::Matrix3d transverse_average(const Eigen::Vector3d& e1, const Eigen::Vector3d& e2);

/// |M↓↑|²·V in J²·m³ for one phonon mode at the resonant wave number.
/// The donor polarizability enters as m*β/ħ² = 9e²/(8E1s²), which keeps the
/// oracle on the same E1s as the closed-form rate.
double matrix_element_sq(Geometry geometry, const PhononMode& mode, double field_T,
                         const MaterialParameters& mat, const DerivedDonorParameters& donor,
                         const PiezoTensor& tensor);
double matrix_element_sq(Geometry geometry, const PhononMode& mode, double field_T,
                         const MaterialParameters& mat, const DerivedDonorParameters& donor);

/// How the three piezo constants combine in |A|².
enum class PiezoSum {
  /// Σ_c |A_c|² over single-constant tensors. This is the combination the
  /// closed-form Λ carries (no h_i·h_j cross terms) and the default.
  PerConstant,
  /// |Σ_c A_c|², the full tensor contraction.
  Coherent,
};

struct OracleOptions {
  PiezoSum piezo_sum = PiezoSum::PerConstant;
  bool longitudinal = true;
  bool transverse = true;
  double transverse_angle = 0.0;  // rotation of the transverse pair about ξ
};

/// Smallest rule degree the oracle accepts: the angular integrand is a
/// degree-8 polynomial in ξ.
inline constexpr int kMinOracleDegree = 8;

/// Γ = (2π/ħ) Σ_{q,α} |M|² δ(ħ q s_α − gμB B), in 1/s.
double golden_rule_rate(Geometry geometry, double field_T, const MaterialParameters& mat,
                        const DerivedDonorParameters& donor, const QuadratureRule& rule,
                        const OracleOptions& options = {});

struct OracleRow {
  double field_T = 0.0;
  Geometry geometry = Geometry::Faraday;
  double gamma_oracle = 0.0;
  double gamma_analytic = 0.0;
  double rel_err = 0.0;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  double max_rel_err = 0.0;
};

OracleReport validate_against_analytic(std::span<const Geometry> geometries,
                                       std::span<const double> fields_T,
                                       const MaterialParameters& mat,
                                       const DerivedDonorParameters& donor,
                                       const QuadratureRule& rule,
                                       const OracleOptions& options = {});

/// B_T,geometry,gamma_oracle_s1,gamma_analytic_s1,rel_err
void write_oracle_csv(std::ostream& out, const OracleReport& report);

}  // namespace donorspin
