#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "donorspin/material.hpp"

namespace donorspin {

/// Field orientation relative to the wurtzite c axis.
enum class Geometry { Faraday, Voigt };  // B ∥ c, B ⊥ c

std::string_view to_string(Geometry g);
/// Accepts "faraday" / "voigt" (case-insensitive). Throws ArgumentError.
Geometry parse_geometry(std::string_view text);

/// Energy and wave-number scales at a given field.
struct EnergyScales {
  double delta1 = 0.0;        // g μB B, eV
  double hbar_omega_c = 0.0;  // ħ e B / m*, eV
  double delta2 = 0.0;        // delta1 - hbar_omega_c / 2, eV (negative for ZnO)
  double q_l = 0.0;           // resonant phonon wave number, longitudinal, 1/m
  double q_t = 0.0;           // transverse, 1/m
  double qa0_l = 0.0;
  double qa0_t = 0.0;
};

EnergyScales energy_scales(const MaterialParameters& mat, const DerivedDonorParameters& donor,
                           double field_T);

/// Dimensionless piezo/spin-orbit prefactor Λ of the one-phonon rate.
double lambda_coefficient(const MaterialParameters& mat);

/// Longitudinal and transverse bracket terms of Λ, (·)/(5 s⁵) in V²·s⁵/m⁷
/// units. Their ratio gives the branch decomposition of the rate.
struct LambdaBrackets {
  double longitudinal = 0.0;
  double transverse = 0.0;
};
LambdaBrackets lambda_brackets(const MaterialParameters& mat);

/// Zero-temperature spin-flip (phonon emission) rate Γ↓↑ in 1/s.
double spin_flip_rate(const MaterialParameters& mat, const DerivedDonorParameters& donor,
                      double field_T, Geometry geometry);

/// Bose occupation 1/(e^{E/kT} - 1); zero at T = 0.
double phonon_occupation(double energy_eV, double temperature_K);

struct RatePoint {
  double field_T = 0.0;
  Geometry geometry = Geometry::Faraday;
  double delta1 = 0.0;         // eV
  double delta2 = 0.0;         // eV
  double gamma_down_up = 0.0;  // 1/s, T = 0 emission rate
  double temperature_K = 0.0;
  double n_ph = 0.0;
  double t1 = 0.0;             // s
  double E1s = 0.0;            // eV actually used for gamma_down_up
};

/// T1 = (e^γ - 1) / (Γ (e^γ + 1)) = tanh(γ/2)/Γ with γ = g μB B / kT.
/// Fills gamma_down_up, temperature_K, n_ph, t1 and field_T; the remaining
/// fields are left for the caller.
RatePoint thermal_t1(double gamma_down_up, double field_T, double temperature_K, double g);

/// One RatePoint per grid field; the grid must be strictly positive and
/// strictly increasing.
std::vector<RatePoint> sweep_field(const MaterialParameters& mat,
                                   const DerivedDonorParameters& donor, Geometry geometry,
                                   std::span<const double> fields_T, double temperature_K);

/// qa0_t above this value triggers a long-wave-approximation warning.
inline constexpr double kLwaWarningThreshold = 0.3;

std::vector<std::string> lwa_warnings(const MaterialParameters& mat,
                                      const DerivedDonorParameters& donor,
                                      std::span<const double> fields_T);

/// B_T,geometry,delta1_eV,delta2_eV,gamma_s1,n_ph,T1_s,E1s_eV
void write_sweep_csv(std::ostream& out, std::span<const RatePoint> points);

}  // namespace donorspin
