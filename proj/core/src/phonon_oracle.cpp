#include "donorspin/phonon_oracle.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Geometry>

#include "donorspin/constants.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/errors.hpp"

namespace donorspin {

namespace {

constexpr int X = 0, Y = 1, Z = 2;

void require_unit(const Eigen::Vector3d& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-6) {
    throw ArgumentError(std::string(what) + " must be a unit vector");
  }
}

}  // namespace

double PiezoTensor::operator()(int i, int j, int k) const {
  if (i == Z) {
    if (j == Z && k == Z) return h33;
    if (j == k && j != Z) return h31;
    return 0.0;
  }
  // i ∈ {x, y}: β_ixz = β_izx = h15
  if ((j == i && k == Z) || (j == Z && k == i)) return h15;
  return 0.0;
}

std::array<double, 27> PiezoTensor::full() const {
  std::array<double, 27> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[9 * i + 3 * j + k] = (*this)(i, j, k);
  return out;
}

std::array<PiezoTensor, 3> PiezoTensor::split() const {
  return {PiezoTensor{h31, 0.0, 0.0}, PiezoTensor{0.0, h33, 0.0}, PiezoTensor{0.0, 0.0, h15}};
}

void PhononMode::validate() const {
  constexpr double tol = 1e-12;
  if (std::abs(xi.norm() - 1.0) > tol) throw ArgumentError("phonon direction must be unit");
  if (std::abs(e_pol.norm() - 1.0) > tol) throw ArgumentError("phonon polarization must be unit");
  if (branch == Branch::Longitudinal) {
    if ((e_pol - xi).norm() > tol) throw ArgumentError("longitudinal polarization must equal xi");
  } else if (std::abs(e_pol.dot(xi)) > tol) {
    throw ArgumentError("transverse polarization must be orthogonal to xi");
  }
  if (!(speed > 0.0)) throw ArgumentError("sound velocity must be positive");
}

double piezo_projection(const PiezoTensor& tensor, const Eigen::Vector3d& xi,
                        const Eigen::Vector3d& e_pol) {
  require_unit(xi, "xi");
  require_unit(e_pol, "polarization");
  double sum = 0.0;
  // β_zjk ξ_z ξ_j e_k
  sum += xi[Z] * (tensor.h31 * (xi[X] * e_pol[X] + xi[Y] * e_pol[Y]) + tensor.h33 * xi[Z] * e_pol[Z]);
  // β_ixz, β_izx with i ∈ {x, y}
  sum += tensor.h15 * (xi[X] * (xi[X] * e_pol[Z] + xi[Z] * e_pol[X]) +
                       xi[Y] * (xi[Y] * e_pol[Z] + xi[Z] * e_pol[Y]));
  return sum;
}

std::array<Eigen::Vector3d, 2> transverse_pair(const Eigen::Vector3d& xi, double angle) {
  Eigen::Index axis = 0;
  xi.cwiseAbs().minCoeff(&axis);
  const Eigen::Vector3d a = Eigen::Vector3d::Unit(axis);
  const Eigen::Vector3d e1 = (a - a.dot(xi) * xi).normalized();
  const Eigen::Vector3d e2 = xi.cross(e1).normalized();
  if (angle == 0.0) return {e1, e2};
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * e1 + s * e2, -s * e1 + c * e2};
}

std::array<PhononMode, 3> phonon_modes(const Eigen::Vector3d& xi, double s_l, double s_t,
                                       double transverse_angle) {
  const auto [e1, e2] = transverse_pair(xi, transverse_angle);
  return {PhononMode{Branch::Longitudinal, xi, xi, s_l},
          PhononMode{Branch::Transverse1, xi, e1, s_t},
          PhononMode{Branch::Transverse2, xi, e2, s_t}};
}

Eigen::Matrix3d transverse_average(const Eigen::Vector3d& e1, const Eigen::Vector3d& e2) {
  return 0.5 * (e1 * e1.transpose() + e2 * e2.transpose());
}

Eigen::Matrix3d transverse_average_check(const Eigen::Vector3d& xi) {
  require_unit(xi, "xi");
  const auto [e1, e2] = transverse_pair(xi);
  return transverse_average(e1, e2);
}

double matrix_element_sq(Geometry geometry, const PhononMode& mode, double field_T,
                         const MaterialParameters& mat, const DerivedDonorParameters& donor,
                         const PiezoTensor& tensor) {
  if (!(field_T > 0.0)) throw ArgumentError("matrix element requires B > 0");
  const auto scales = energy_scales(mat, donor, field_T);
  const double hbar = PC::hbar_J_s();
  const double delta1 = PC::eV_to_J(scales.delta1);
  const double e1s = PC::eV_to_J(donor.E1s);
  const double alpha = PC::eV_to_J(mat.alpha_so());  // J m
  const double q = std::abs(delta1) / (hbar * mode.speed);

  // |ℰ|²·V = q ħ A² / (2 ρ s): phonon field at the donor, per unit volume.
  const double a = piezo_projection(tensor, mode.xi, mode.e_pol);
  const double field_sq = q * hbar * a * a / (2.0 * mat.rho * mode.speed);

  // α m*β/(e ħ²) with m*β/ħ² = 9e²/(8E1s²) gives 9 e α / (8 E1s²).
  const double coupling = 9.0 * PC::e_charge * alpha / (8.0 * e1s * e1s);
  if (geometry == Geometry::Voigt) {
    const double xi_x = mode.xi[X];
    return delta1 * delta1 * coupling * coupling * xi_x * xi_x * field_sq;
  }
  const double prefactor = 2.0 * delta1 - PC::eV_to_J(scales.hbar_omega_c);
  const double in_plane = mode.xi[X] * mode.xi[X] + mode.xi[Y] * mode.xi[Y];
  return prefactor * prefactor * 0.25 * coupling * coupling * in_plane * field_sq;
}

double matrix_element_sq(Geometry geometry, const PhononMode& mode, double field_T,
                         const MaterialParameters& mat, const DerivedDonorParameters& donor) {
  return matrix_element_sq(geometry, mode, field_T, mat, donor, PiezoTensor::from(mat));
}

double golden_rule_rate(Geometry geometry, double field_T, const MaterialParameters& mat,
                        const DerivedDonorParameters& donor, const QuadratureRule& rule,
                        const OracleOptions& options) {
  if (rule.degree < kMinOracleDegree) {
    throw ArgumentError("quadrature degree " + std::to_string(rule.degree) +
                        " below the oracle minimum " + std::to_string(kMinOracleDegree));
  }
  if (field_T < 0.0) throw ArgumentError("magnetic field must be non-negative");
  if (field_T == 0.0) return 0.0;
  mat.validate();

  const double hbar = PC::hbar_J_s();
  const double delta1 = PC::eV_to_J(std::abs(mat.g_e * PC::mu_B * field_T));
  const PiezoTensor tensor = PiezoTensor::from(mat);
  const auto parts = tensor.split();

  auto mode_weight = [&](const PhononMode& mode) {
    // q0² / (ħ s) from ∫ q² dq δ(ħ q s − Δ1).
    const double q0 = delta1 / (hbar * mode.speed);
    return q0 * q0 / (hbar * mode.speed);
  };
  auto mode_sq = [&](const PhononMode& mode) {
    if (options.piezo_sum == PiezoSum::Coherent) {
      return matrix_element_sq(geometry, mode, field_T, mat, donor, tensor);
    }
    double s = 0.0;
    for (const auto& part : parts) s += matrix_element_sq(geometry, mode, field_T, mat, donor, part);
    return s;
  };

  const double angular = rule.integrate([&](const Eigen::Vector3d& xi) {
    const auto modes = phonon_modes(xi, mat.s_l, mat.s_t, options.transverse_angle);
    double acc = 0.0;
    for (const auto& mode : modes) {
      const bool longitudinal = mode.branch == Branch::Longitudinal;
      if (longitudinal ? !options.longitudinal : !options.transverse) continue;
      acc += mode_weight(mode) * mode_sq(mode);
    }
    return acc;
  });
  // (2π/ħ) · V/(2π)³ = V / (4π² ħ)
  return angular / (4.0 * std::numbers::pi * std::numbers::pi * hbar);
}

OracleReport validate_against_analytic(std::span<const Geometry> geometries,
                                       std::span<const double> fields_T,
                                       const MaterialParameters& mat,
                                       const DerivedDonorParameters& donor,
                                       const QuadratureRule& rule, const OracleOptions& options) {
  OracleReport report;
  for (Geometry g : geometries) {
    for (double b : fields_T) {
      if (!(b > 0.0)) throw ArgumentError("oracle field grid must be strictly positive");
      OracleRow row;
      row.field_T = b;
      row.geometry = g;
      row.gamma_oracle = golden_rule_rate(g, b, mat, donor, rule, options);
      row.gamma_analytic = spin_flip_rate(mat, donor, b, g);
      row.rel_err = row.gamma_analytic != 0.0
                        ? std::abs(row.gamma_oracle - row.gamma_analytic) / row.gamma_analytic
                        : std::abs(row.gamma_oracle);
      report.max_rel_err = std::max(report.max_rel_err, row.rel_err);
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_oracle_csv(std::ostream& out, const OracleReport& report) {
  out << "B_T,geometry,gamma_oracle_s1,gamma_analytic_s1,rel_err\n";
  for (const auto& r : report.rows) {
    csv::write_row(out, {csv::format_number(r.field_T), to_string(r.geometry),
                         csv::format_number(r.gamma_oracle), csv::format_number(r.gamma_analytic),
                         csv::format_number(r.rel_err)});
  }
}

}  // namespace donorspin
