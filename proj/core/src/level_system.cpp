#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "donorspin/constants.hpp"
#include "donorspin/dynamics.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/lineshape.hpp"

namespace donorspin {

namespace {

struct LineName {
  Line id;
  std::string_view name;
};

constexpr std::array<LineName, 8> kLineNames{{
    {Line::HDown, "H_down"},
    {Line::HUp, "H_up"},
    {Line::VDown, "V_down"},
    {Line::VUp, "V_up"},
    {Line::SigmaPlus, "sigma_plus"},
    {Line::SigmaMinus, "sigma_minus"},
    {Line::ZUp, "z_up"},
    {Line::ZDown, "z_down"},
}};

int family(Line line) {
  switch (line) {
    case Line::HDown:
    case Line::HUp:
      return 0;
    case Line::VDown:
    case Line::VUp:
      return 1;
    case Line::SigmaPlus:
      return 2;
    case Line::SigmaMinus:
      return 3;
    case Line::ZUp:
    case Line::ZDown:
      return 4;
  }
  return -1;
}

std::string lower(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double interpolate(const std::vector<std::pair<double, double>>& table, double x) {
  if (table.empty()) return 0.0;
  if (x <= table.front().first) return table.front().second;
  if (x >= table.back().first) return table.back().second;
  const auto it = std::upper_bound(table.begin(), table.end(), x,
                                   [](double v, const auto& row) { return v < row.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (x - lo.first) / (hi.first - lo.first);
  return lo.second + t * (hi.second - lo.second);
}

/// Splits a total rate into (↑→↓, ↓→↑) with ratio e^{-γ}.
std::pair<double, double> thermal_split(double total, double gamma) {
  const double boltz = std::isinf(gamma) ? 0.0 : std::exp(-gamma);
  return {total / (1.0 + boltz), total * boltz / (1.0 + boltz)};
}

}  // namespace

std::string_view to_string(Line line) {
  for (const auto& entry : kLineNames) {
    if (entry.id == line) return entry.name;
  }
  return "?";
}

Line parse_line(std::string_view text) {
  const std::string key = lower(text);
  for (const auto& entry : kLineNames) {
    if (lower(entry.name) == key) return entry.id;
  }
  throw ArgumentError("unknown optical line '" + std::string(text) + "'");
}

const OpticalLine& LevelSystem::line(Line id) const {
  for (const auto& l : lines) {
    if (l.id == id) return l;
  }
  throw ArgumentError("line " + std::string(to_string(id)) + " does not exist in " +
                      std::string(to_string(geometry)) + " geometry");
}

bool LevelSystem::has_line(Line id) const {
  return std::any_of(lines.begin(), lines.end(), [&](const auto& l) { return l.id == id; });
}

double LevelSystem::branching(int excited, int ground) const {
  double b = 0.0;
  for (const auto& l : lines) {
    if (l.excited == excited && l.ground == ground) b += l.branching;
  }
  return b;
}

void LevelSystem::set_t1(double t1) {
  if (!(t1 > 0.0)) throw ArgumentError("T1 must be positive");
  const double total = relaxation_rate();
  if (total > 0.0) {
    const double scale = 1.0 / (t1 * total);
    spin_flip_down_up *= scale;
    spin_flip_up_down *= scale;
  } else {
    std::tie(spin_flip_down_up, spin_flip_up_down) = thermal_split(1.0 / t1, gamma);
  }
}

Eigen::Vector4d LevelSystem::thermal_populations() const {
  const double total = relaxation_rate();
  double ratio = 0.0;  // p↑ / p↓
  if (total > 0.0) {
    ratio = spin_flip_up_down / spin_flip_down_up;
  } else {
    ratio = std::isinf(gamma) ? 0.0 : std::exp(-gamma);
  }
  return Eigen::Vector4d(1.0 / (1.0 + ratio), ratio / (1.0 + ratio), 0.0, 0.0);
}

void LevelSystem::validate() const {
  if (!(radiative_rate > 0.0)) throw ArgumentError("radiative rate must be positive");
  if (!(homogeneous_fwhm > 0.0)) throw ArgumentError("homogeneous linewidth must be positive");
  if (spin_flip_down_up < 0.0 || spin_flip_up_down < 0.0) {
    throw ArgumentError("spin-flip rates must be non-negative");
  }
  if ((populations.array() < -1e-12).any()) throw ArgumentError("populations must be non-negative");
  if (std::abs(populations.sum() - 1.0) > 1e-9) throw ArgumentError("populations must sum to one");
  for (int x : {kXHoleDown, kXHoleUp}) {
    const double b = branching(x, kDown) + branching(x, kUp);
    if (std::abs(b - 1.0) > 1e-12) throw ArgumentError("branching fractions must sum to one");
  }
}

LevelSystem build_level_system(Geometry geometry, double field_T, double temperature_K,
                               const MaterialParameters& mat,
                               const DerivedDonorParameters& donor,
                               const OpticsConfig& optics) {
  if (field_T < 0.0) throw ArgumentError("magnetic field must be non-negative");
  if (temperature_K < 0.0) throw ArgumentError("temperature must be non-negative");
  if (!(optics.radiative_lifetime > 0.0)) throw ArgumentError("radiative lifetime must be positive");
  if (!(optics.z_branch_ratio > 0.0)) throw ArgumentError("z-branch ratio must be positive");
  if (!(optics.voigt_h_fraction >= 0.0 && optics.voigt_h_fraction <= 1.0)) {
    throw ArgumentError("Voigt H fraction must lie in [0, 1]");
  }
  if (!(optics.homogeneous_fwhm > 0.0)) throw ArgumentError("homogeneous linewidth must be positive");
  if (optics.t1_override < 0.0) throw ArgumentError("T1 override must be non-negative");

  LevelSystem s;
  s.geometry = geometry;
  s.field_T = field_T;
  s.temperature_K = temperature_K;
  s.radiative_rate = 1.0 / optics.radiative_lifetime;
  s.homogeneous_fwhm = optics.homogeneous_fwhm;
  s.line_center = optics.line_center;

  const double mub = PC::mu_B * field_T;
  const double g_h = geometry == Geometry::Voigt ? mat.g_h_perp : mat.g_h_par;
  std::array<double, 4> energy{};
  energy[kDown] = -0.5 * mat.g_e * mub;
  energy[kUp] = 0.5 * mat.g_e * mub;
  energy[kXHoleDown] = 0.5 * g_h * mub;
  energy[kXHoleUp] = -0.5 * g_h * mub;
  auto add = [&](Line id, int ground, int excited, double branching) {
    s.lines.push_back({id, ground, excited, energy[excited] - energy[ground], branching, 0.0});
  };
  if (geometry == Geometry::Voigt) {
    const double h = optics.voigt_h_fraction;
    add(Line::HDown, kDown, kXHoleDown, h);
    add(Line::VUp, kUp, kXHoleDown, 1.0 - h);
    add(Line::HUp, kUp, kXHoleUp, h);
    add(Line::VDown, kDown, kXHoleUp, 1.0 - h);
  } else {
    const double r = optics.z_branch_ratio;
    add(Line::SigmaPlus, kDown, kXHoleUp, r / (r + 1.0));
    add(Line::ZUp, kUp, kXHoleUp, 1.0 / (r + 1.0));
    add(Line::SigmaMinus, kUp, kXHoleDown, r / (r + 1.0));
    add(Line::ZDown, kDown, kXHoleDown, 1.0 / (r + 1.0));
  }
  double strongest = 0.0;
  for (const auto& l : s.lines) strongest = std::max(strongest, l.branching);
  for (auto& l : s.lines) l.strength = strongest > 0.0 ? l.branching / strongest : 0.0;

  const double delta1 = std::abs(mat.g_e * mub);
  if (delta1 == 0.0) {
    s.gamma = 0.0;
  } else if (temperature_K == 0.0) {
    s.gamma = std::numeric_limits<double>::infinity();
  } else {
    s.gamma = delta1 / (PC::k_B * temperature_K);
  }
  if (delta1 > 0.0) {
    const double rate = spin_flip_rate(mat, donor, field_T, geometry);
    const double n_ph = phonon_occupation(delta1, temperature_K);
    s.spin_flip_down_up = rate * (n_ph + 1.0);
    s.spin_flip_up_down = rate * n_ph;
  }
  if (optics.gamma0 != 0.0) {
    const auto [du, ud] = thermal_split(optics.gamma0, s.gamma);
    s.spin_flip_down_up += du;
    s.spin_flip_up_down += ud;
    if (s.spin_flip_down_up < 0.0 || s.spin_flip_up_down < 0.0) {
      throw ArgumentError("gamma0 makes a spin-flip rate negative");
    }
  }
  if (optics.t1_override > 0.0) s.set_t1(optics.t1_override);
  s.populations = s.thermal_populations();
  return s;
}

double laser_energy(const LevelSystem& system, const Drive& drive) {
  return system.line_center + system.line(drive.line).offset + drive.detuning;
}

Eigen::Matrix4d rate_matrix(const LevelSystem& system, const std::optional<Drive>& drive,
                            double shift) {
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  double du = system.spin_flip_down_up;
  double ud = system.spin_flip_up_down;
  if (!system.gamma0_table.empty()) {
    const auto [extra_du, extra_ud] = thermal_split(interpolate(system.gamma0_table, shift),
                                                    system.gamma);
    du = std::max(0.0, du + extra_du);
    ud = std::max(0.0, ud + extra_ud);
  }
  q(kDown, kUp) += du;
  q(kUp, kUp) -= du;
  q(kUp, kDown) += ud;
  q(kDown, kDown) -= ud;

  for (const auto& l : system.lines) {
    const double r = system.radiative_rate * l.branching;
    q(l.ground, l.excited) += r;
    q(l.excited, l.excited) -= r;
  }

  if (drive && drive->rate > 0.0) {
    const double laser = laser_energy(system, *drive);
    const int fam = family(drive->line);
    for (const auto& l : system.lines) {
      if (!drive->all_polarizations && family(l.id) != fam) continue;
      const double detuning = laser - (system.line_center + l.offset + shift);
      const double s = drive->rate * l.strength *
                       lineshape::lorentzian_peak(detuning, system.homogeneous_fwhm);
      q(l.excited, l.ground) += s;
      q(l.ground, l.ground) -= s;
      q(l.ground, l.excited) += s;
      q(l.excited, l.excited) -= s;
    }
  }
  return q;
}

namespace {

/// Grassmann–Taksar–Heyman elimination: subtraction-free, so the result is
/// nonnegative and states without a source come out exactly zero. Returns
/// nothing when the chain is reducible.
std::optional<Eigen::Vector4d> gth_steady_state(const Eigen::Matrix4d& q) {
  // a(i, j): rate i → j.
  Eigen::Matrix4d a = q.transpose();
  a.diagonal().setZero();
  for (int k = 3; k > 0; --k) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += a(k, j);
    if (!(s > 0.0)) return std::nullopt;
    for (int i = 0; i < k; ++i) a(i, k) /= s;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i != j) a(i, j) += a(i, k) * a(k, j);
      }
    }
  }
  Eigen::Vector4d p;
  p[0] = 1.0;
  for (int j = 1; j < 4; ++j) {
    p[j] = 0.0;
    for (int i = 0; i < j; ++i) p[j] += p[i] * a(i, j);
  }
  return p / p.sum();
}

}  // namespace

Eigen::Vector4d steady_state(const Eigen::Matrix4d& q) {
  if (const auto p = gth_steady_state(q)) return *p;
  Eigen::Matrix<double, 5, 4> a;
  a.topRows<4>() = q;
  a.row(4).setOnes();
  Eigen::Matrix<double, 5, 1> b = Eigen::Matrix<double, 5, 1>::Zero();
  b(4) = 1.0;
  // Scale the normalization row to the rate scale so it is not swamped.
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  a.row(4) *= scale;
  b(4) *= scale;
  Eigen::Vector4d p = a.colPivHouseholderQr().solve(b);
  p = p.cwiseMax(0.0);
  return p / p.sum();
}

void EnsembleSpec::validate() const {
  if (!(n_donors > 0.0)) throw ArgumentError("n_donors must be positive");
  if (!(inhomogeneous_fwhm > 0.0)) throw ArgumentError("inhomogeneous FWHM must be positive");
  if (sub_ensembles < 1) throw ArgumentError("sub-ensemble count must be >= 1");
}

std::vector<double> EnsembleSpec::detunings() const {
  validate();
  std::vector<double> out(static_cast<std::size_t>(sub_ensembles), 0.0);
  if (sub_ensembles == 1) return out;
  const boost::math::normal dist(0.0, inhomogeneous_fwhm / lineshape::kFwhmPerSigma);
  for (int k = 0; k < sub_ensembles; ++k) {
    out[static_cast<std::size_t>(k)] = boost::math::quantile(dist, (k + 0.5) / sub_ensembles);
  }
  return out;
}

void Detection::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ArgumentError("efficiency must lie in [0, 1]");
  if (dark_rate < 0.0) throw ArgumentError("dark rate must be non-negative");
  if (!(satellite_fraction >= 0.0 && satellite_fraction <= 1.0)) {
    throw ArgumentError("satellite fraction must lie in [0, 1]");
  }
  if (channel == DetectionChannel::Lines && lines.empty()) {
    throw ArgumentError("line detection needs at least one line");
  }
}

Eigen::Vector4d detection_weights(const LevelSystem& system, const Detection& detection) {
  detection.validate();
  Eigen::Vector4d w = Eigen::Vector4d::Zero();
  switch (detection.channel) {
    case DetectionChannel::Lines:
      for (Line id : detection.lines) {
        const auto& l = system.line(id);
        w[l.excited] += system.radiative_rate * l.branching;
      }
      break;
    case DetectionChannel::Satellite:
      w[kXHoleDown] = w[kXHoleUp] = system.radiative_rate * detection.satellite_fraction;
      break;
    case DetectionChannel::All:
      w[kXHoleDown] = w[kXHoleUp] = system.radiative_rate;
      break;
  }
  return w * detection.efficiency;
}

}  // namespace donorspin
