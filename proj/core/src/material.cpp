#include "donorspin/material.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "donorspin/constants.hpp"
#include "donorspin/errors.hpp"

namespace donorspin {

namespace {

using json = nlohmann::json;

void require_positive(double value, const char* field) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw ValidationError(field, std::string(field) + " must be positive");
  }
}

void require_finite(double value, const char* field) {
  if (!std::isfinite(value)) {
    throw ValidationError(field, std::string(field) + " must be finite");
  }
}

struct Key {
  const char* name;
  double MaterialParameters::*member;
};

constexpr Key kMaterialKeys[] = {
    {"rho_kg_m3", &MaterialParameters::rho},
    {"m_star_ratio", &MaterialParameters::m_star_ratio},
    {"eps_static", &MaterialParameters::eps},
    {"alpha_so_meV_A", &MaterialParameters::alpha_so_meV_A},
    {"g_e", &MaterialParameters::g_e},
    {"h33_V_m", &MaterialParameters::h33},
    {"h31_V_m", &MaterialParameters::h31},
    {"h15_V_m", &MaterialParameters::h15},
    {"s_l_m_s", &MaterialParameters::s_l},
    {"s_t_m_s", &MaterialParameters::s_t},
    {"g_h_perp", &MaterialParameters::g_h_perp},
    {"g_h_par", &MaterialParameters::g_h_par},
};

double number_at(const json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError("$." + key, "expected a number");
  return v.get<double>();
}

}  // namespace

double MaterialParameters::m_star_kg() const { return m_star_ratio * PC::m0; }

void MaterialParameters::validate() const {
  require_positive(rho, "rho");
  require_positive(m_star_ratio, "m_star_ratio");
  require_positive(eps, "eps");
  require_positive(s_l, "s_l");
  require_positive(s_t, "s_t");
  if (!(s_l > s_t)) {
    throw ValidationError("s_l", "s_l must exceed s_t");
  }
  require_finite(alpha_so_meV_A, "alpha_so");
  require_finite(g_e, "g_e");
  require_finite(h33, "h33");
  require_finite(h31, "h31");
  require_finite(h15, "h15");
  require_finite(g_h_perp, "g_h_perp");
  require_finite(g_h_par, "g_h_par");
}

PiezoConstants piezo_from_stress_moduli(double e33, double e31, double e15, double eps) {
  if (!(eps > 0.0)) throw DomainError("dielectric constant must be positive");
  const double scale = eps * PC::eps0;
  return {e33 / scale, e31 / scale, e15 / scale};
}

DerivedDonorParameters derive_donor(const MaterialParameters& mat, const DonorModel& model) {
  mat.validate();
  DerivedDonorParameters d;
  d.rydberg_eff = PC::rydberg * mat.m_star_ratio / (mat.eps * mat.eps);
  if (std::holds_alternative<HydrogenicDonor>(model)) {
    d.a0 = PC::bohr_radius_H * mat.eps / mat.m_star_ratio;
    d.E1s = d.rydberg_eff;
  } else {
    const auto& ex = std::get<ExplicitDonor>(model);
    if (!(ex.a0 > 0.0)) throw ArgumentError("explicit donor a0 must be positive");
    if (!(ex.E1s > 0.0)) throw ArgumentError("explicit donor E1s must be positive");
    d.a0 = ex.a0;
    d.E1s = ex.E1s;
  }
  d.beta_pol = 4.5 * mat.eps * d.a0 * d.a0 * d.a0;
  return d;
}

MaterialConfig load_material_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("parse error: ") + e.what());
  }
  if (doc.is_null()) doc = json::object();
  if (!doc.is_object()) throw ConfigError("$", "expected a JSON object");

  MaterialConfig cfg;
  for (const auto& key : kMaterialKeys) {
    if (doc.contains(key.name)) cfg.material.*(key.member) = number_at(doc, key.name);
  }

  ExplicitDonor explicit_donor;
  bool hydrogenic = false;
  if (doc.contains("donor_model")) {
    const auto& v = doc.at("donor_model");
    if (!v.is_string()) throw ConfigError("$.donor_model", "expected a string");
    const auto name = v.get<std::string>();
    if (name == "hydrogenic") {
      hydrogenic = true;
    } else if (name != "explicit") {
      throw ConfigError("$.donor_model", "expected 'explicit' or 'hydrogenic', got '" + name + "'");
    }
  }
  if (doc.contains("a0_nm")) explicit_donor.a0 = number_at(doc, "a0_nm") * 1e-9;
  if (doc.contains("E1s_meV")) explicit_donor.E1s = number_at(doc, "E1s_meV") * 1e-3;
  if (hydrogenic) {
    cfg.donor = HydrogenicDonor{};
  } else {
    if (!(explicit_donor.a0 > 0.0)) throw ValidationError("a0", "a0 must be positive");
    if (!(explicit_donor.E1s > 0.0)) throw ValidationError("E1s", "E1s must be positive");
    cfg.donor = explicit_donor;
  }

  for (const auto& item : doc.items()) {
    bool known = item.key() == "a0_nm" || item.key() == "E1s_meV" || item.key() == "donor_model";
    for (const auto& key : kMaterialKeys) known = known || item.key() == key.name;
    if (!known) cfg.warnings.push_back("unknown material key '" + item.key() + "' ignored");
  }

  cfg.material.validate();
  return cfg;
}

MaterialConfig load_material_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open material config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_material_config(buffer.str());
}

std::string to_json(const MaterialParameters& mat, const DonorModel& donor) {
  json doc = json::object();
  for (const auto& key : kMaterialKeys) doc[key.name] = mat.*(key.member);
  if (const auto* ex = std::get_if<ExplicitDonor>(&donor)) {
    doc["donor_model"] = "explicit";
    doc["a0_nm"] = ex->a0 * 1e9;
    doc["E1s_meV"] = ex->E1s * 1e3;
  } else {
    doc["donor_model"] = "hydrogenic";
  }
  return doc.dump(2);
}

}  // namespace donorspin
