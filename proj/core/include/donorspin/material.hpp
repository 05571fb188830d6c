#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace donorspin {

/// Isotropic-averaged wurtzite ZnO parameters. Defaults are the values used
/// throughout the library (ρ, m*, ε, α, g, h_ij, sound velocities) plus the
/// hole g-factors used only by the spectroscopy simulations.
struct MaterialParameters {
  double rho = 5.6e3;             // kg/m^3
  double m_star_ratio = 0.25;     // m*/m0
  double eps = 8.1;               // static dielectric constant
  double alpha_so_meV_A = 1.1;    // spin-orbit constant, meV·Å
  double g_e = 2.0;
  double h33 = 1.5e10;            // V/m
  double h31 = -0.6e10;           // V/m
  double h15 = -0.6e10;           // V/m
  double s_l = 6.1e3;             // m/s
  double s_t = 2.9e3;             // m/s
  double g_h_perp = 0.34;
  double g_h_par = -1.22;

  /// α in eV·m.
  double alpha_so() const { return alpha_so_meV_A * 1e-13; }
  double m_star_kg() const;

  /// Throws ValidationError naming the first offending field.
  void validate() const;

  friend bool operator==(const MaterialParameters&, const MaterialParameters&) = default;
};

struct PiezoConstants {
  double h33 = 0.0;
  double h31 = 0.0;
  double h15 = 0.0;
};

/// h_ij = e_ij / (ε ε0). Stress moduli in C/m², result in V/m.
PiezoConstants piezo_from_stress_moduli(double e33, double e31, double e15, double eps);

/// Donor orbital scale used by the rate formulas.
struct DerivedDonorParameters {
  double a0 = 0.0;           // donor Bohr radius, m
  double E1s = 0.0;          // binding energy, eV
  double beta_pol = 0.0;     // 9 ε a0³ / 2, m³ (Gaussian-style volume polarizability)
  double rydberg_eff = 0.0;  // (m*/m0)/ε² · Ry, eV
};

struct HydrogenicDonor {
  friend bool operator==(const HydrogenicDonor&, const HydrogenicDonor&) = default;
};

struct ExplicitDonor {
  double a0 = 1.5e-9;   // m
  double E1s = 54.6e-3; // eV
  friend bool operator==(const ExplicitDonor&, const ExplicitDonor&) = default;
};

using DonorModel = std::variant<ExplicitDonor, HydrogenicDonor>;

/// Default donor model: a0 = 1.5 nm, E1s = 54.6 meV (Ga donor).
inline DonorModel default_donor_model() { return ExplicitDonor{}; }

DerivedDonorParameters derive_donor(const MaterialParameters& mat,
                                    const DonorModel& model = default_donor_model());

/// Parsed material configuration document.
struct MaterialConfig {
  MaterialParameters material;
  DonorModel donor = default_donor_model();
  std::vector<std::string> warnings;  // unknown keys etc.
};

/// Parses the flat JSON material document. Missing keys fall back to defaults;
/// unknown keys produce warnings. Throws ConfigError on malformed input and
/// ValidationError when the result violates an invariant.
MaterialConfig load_material_config(std::string_view json_text);
MaterialConfig load_material_config_file(const std::filesystem::path& path);

/// Serializes to the same flat JSON document `load_material_config` reads.
std::string to_json(const MaterialParameters& mat, const DonorModel& donor = default_donor_model());

}  // namespace donorspin
