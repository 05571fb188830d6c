#include "donorspin/relaxation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <ostream>

#include "donorspin/constants.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/errors.hpp"

namespace donorspin {

std::string_view to_string(Geometry g) { return g == Geometry::Faraday ? "faraday" : "voigt"; }

Geometry parse_geometry(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "faraday") return Geometry::Faraday;
  if (lower == "voigt") return Geometry::Voigt;
  throw ArgumentError("unknown geometry '" + std::string(text) + "' (expected faraday|voigt)");
}

EnergyScales energy_scales(const MaterialParameters& mat, const DerivedDonorParameters& donor,
                           double field_T) {
  if (field_T < 0.0) throw ArgumentError("magnetic field must be non-negative");
  EnergyScales s;
  s.delta1 = mat.g_e * PC::mu_B * field_T;
  // ħ e B / m* in joules, divided by e.
  s.hbar_omega_c = PC::hbar_J_s() * field_T / mat.m_star_kg();
  s.delta2 = s.delta1 - 0.5 * s.hbar_omega_c;
  const double phonon_energy = std::abs(s.delta1);
  s.q_l = phonon_energy / (PC::hbar_eV_s() * mat.s_l);
  s.q_t = phonon_energy / (PC::hbar_eV_s() * mat.s_t);
  s.qa0_l = s.q_l * donor.a0;
  s.qa0_t = s.q_t * donor.a0;
  return s;
}

LambdaBrackets lambda_brackets(const MaterialParameters& mat) {
  const double h33 = mat.h33 * mat.h33;
  const double h31 = mat.h31 * mat.h31;
  const double h15 = mat.h15 * mat.h15;
  LambdaBrackets b;
  b.longitudinal = (5.0 * h33 + 8.0 * h31 + 32.0 * h15) / (5.0 * std::pow(mat.s_l, 5));
  b.transverse = (4.0 * h33 + 4.0 * h31 + 52.0 * h15) / (5.0 * std::pow(mat.s_t, 5));
  return b;
}

double lambda_coefficient(const MaterialParameters& mat) {
  mat.validate();
  const double alpha_J_m = mat.alpha_so() * PC::e_charge;
  const double e_alpha = PC::e_charge * alpha_J_m;
  const double hbar = PC::hbar_J_s();
  const auto b = lambda_brackets(mat);
  return 9.0 * e_alpha * e_alpha / (448.0 * std::numbers::pi * mat.rho * hbar * hbar * hbar) *
         (b.longitudinal + b.transverse);
}

double spin_flip_rate(const MaterialParameters& mat, const DerivedDonorParameters& donor,
                      double field_T, Geometry geometry) {
  if (field_T < 0.0) throw ArgumentError("magnetic field must be non-negative");
  if (field_T == 0.0) return 0.0;
  const auto s = energy_scales(mat, donor, field_T);
  const double lambda = lambda_coefficient(mat);
  const double e4 = std::pow(donor.E1s, 4);
  const double hbar = PC::hbar_eV_s();
  if (geometry == Geometry::Faraday) {
    return lambda * std::pow(s.delta1, 3) * s.delta2 * s.delta2 / (hbar * e4);
  }
  return lambda * std::pow(s.delta1, 5) / (2.0 * hbar * e4);
}

double phonon_occupation(double energy_eV, double temperature_K) {
  if (temperature_K < 0.0) throw ArgumentError("temperature must be non-negative");
  if (temperature_K == 0.0) return 0.0;
  const double x = std::abs(energy_eV) / (PC::k_B * temperature_K);
  if (x == 0.0) throw DomainError("phonon occupation diverges at zero energy");
  return 1.0 / std::expm1(x);
}

RatePoint thermal_t1(double gamma_down_up, double field_T, double temperature_K, double g) {
  if (!(gamma_down_up > 0.0)) throw ArgumentError("spin-flip rate must be positive");
  if (temperature_K < 0.0) throw ArgumentError("temperature must be non-negative");
  if (!(field_T > 0.0) || g == 0.0) {
    throw DomainError("T1 requires a nonzero Zeeman splitting (B > 0, g != 0)");
  }
  RatePoint p;
  p.field_T = field_T;
  p.gamma_down_up = gamma_down_up;
  p.temperature_K = temperature_K;
  p.delta1 = g * PC::mu_B * field_T;
  if (temperature_K == 0.0) {
    p.n_ph = 0.0;
    p.t1 = 1.0 / gamma_down_up;
    return p;
  }
  const double gamma = std::abs(p.delta1) / (PC::k_B * temperature_K);
  p.n_ph = 1.0 / std::expm1(gamma);
  p.t1 = std::tanh(0.5 * gamma) / gamma_down_up;
  return p;
}

std::vector<RatePoint> sweep_field(const MaterialParameters& mat,
                                   const DerivedDonorParameters& donor, Geometry geometry,
                                   std::span<const double> fields_T, double temperature_K) {
  for (std::size_t i = 0; i < fields_T.size(); ++i) {
    if (!(fields_T[i] > 0.0)) throw ArgumentError("field grid must be strictly positive");
    if (i > 0 && !(fields_T[i] > fields_T[i - 1])) {
      throw ArgumentError("field grid must be strictly increasing");
    }
  }
  std::vector<RatePoint> out;
  out.reserve(fields_T.size());
  for (double b : fields_T) {
    const auto scales = energy_scales(mat, donor, b);
    auto p = thermal_t1(spin_flip_rate(mat, donor, b, geometry), b, temperature_K, mat.g_e);
    p.geometry = geometry;
    p.delta1 = scales.delta1;
    p.delta2 = scales.delta2;
    p.E1s = donor.E1s;
    out.push_back(p);
  }
  return out;
}

std::vector<std::string> lwa_warnings(const MaterialParameters& mat,
                                      const DerivedDonorParameters& donor,
                                      std::span<const double> fields_T) {
  std::vector<std::string> out;
  for (double b : fields_T) {
    const auto s = energy_scales(mat, donor, b);
    if (s.qa0_t > kLwaWarningThreshold) {
      out.push_back("B = " + csv::format_number(b) + " T: transverse q*a0 = " +
                    csv::format_number(s.qa0_t) + " exceeds " +
                    csv::format_number(kLwaWarningThreshold) +
                    "; long-wave approximation is marginal");
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& out, std::span<const RatePoint> points) {
  out << "B_T,geometry,delta1_eV,delta2_eV,gamma_s1,n_ph,T1_s,E1s_eV\n";
  for (const auto& p : points) {
    csv::write_row(out, {csv::format_number(p.field_T), to_string(p.geometry),
                         csv::format_number(p.delta1), csv::format_number(p.delta2),
                         csv::format_number(p.gamma_down_up), csv::format_number(p.n_ph),
                         csv::format_number(p.t1), csv::format_number(p.E1s)});
  }
}

}  // namespace donorspin
