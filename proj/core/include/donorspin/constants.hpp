#pragma once

#include <numbers>

namespace donorspin {

/// CODATA-2018 values. Energies are in eV unless the name says otherwise.
///
/// The reduced Planck constant is derived from the exact SI value of h rather
/// than taken from the rounded published ħ, which keeps the hydrogenic
/// identities (Ry = ħ²/2m₀a_H², μ_B = eħ/2m₀) consistent to ~1e-11.
struct PhysicalConstants {
  static constexpr double mu_B = 5.7883818060e-5;          // eV/T
  static constexpr double k_B = 8.617333262e-5;            // eV/K
  static constexpr double e_charge = 1.602176634e-19;      // C (exact)
  static constexpr double planck = 6.62607015e-34;         // J s (exact)
  static constexpr double eps0 = 8.8541878128e-12;         // F/m
  static constexpr double m0 = 9.1093837015e-31;           // kg
  static constexpr double rydberg = 13.605693122994;       // eV
  static constexpr double bohr_radius_H = 5.29177210903e-11;  // m

  static constexpr double hbar_J_s() { return planck / (2.0 * std::numbers::pi); }
  static constexpr double hbar_eV_s() { return hbar_J_s() / e_charge; }
  /// Energy conversion.
  static constexpr double eV_to_J(double energy_eV) { return energy_eV * e_charge; }
  static constexpr double J_to_eV(double energy_J) { return energy_J / e_charge; }
  /// Photon energy h·ν for a frequency in Hz, in eV.
  static constexpr double frequency_to_eV(double hertz) { return planck * hertz / e_charge; }
};

using PC = PhysicalConstants;

}  // namespace donorspin
