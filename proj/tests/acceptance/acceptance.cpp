// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "donorspin/constants.hpp"
#include "donorspin/dynamics.hpp"
#include "donorspin/fitting.hpp"
#include "donorspin/material.hpp"
#include "donorspin/phonon_oracle.hpp"
#include "donorspin/relaxation.hpp"

using namespace donorspin;

namespace {

// Tolerances, pinned.
constexpr double kLambdaMin = 0.019, kLambdaMax = 0.024;
constexpr double kRateFaraday = 0.080, kRateVoigt = 0.040, kRateTol = 0.10;
constexpr double kT1Min = 0.43, kT1Max = 0.55;
constexpr double kRatioTol = 1e-6;
constexpr double kOracleTol = 5e-3;
constexpr double kScalingTol = 1e-6;
constexpr double kRoundTripTol = 0.05;
constexpr double kBalanceTol = 1e-6;
constexpr double kExponentMin = 4.6, kExponentMax = 5.0;
constexpr double kGEff = 3.19, kGEffTol = 0.02;
constexpr double kWindowTol = 0.10;

constexpr double kInjectedT1 = 0.01;  // s
constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const MaterialParameters kMat{};
const DerivedDonorParameters kDonor = derive_donor(kMat);

Outcome lambda_check() {
  const double l = lambda_coefficient(kMat);
  return {l >= kLambdaMin && l <= kLambdaMax, fmt("Lambda = %.6f", l)};
}

Outcome rate_constants() {
  const double f = spin_flip_rate(kMat, kDonor, 1.0, Geometry::Faraday);
  const double v = spin_flip_rate(kMat, kDonor, 1.0, Geometry::Voigt);
  const bool ok = std::abs(f / kRateFaraday - 1.0) <= kRateTol && std::abs(v / kRateVoigt - 1.0) <= kRateTol;
  return {ok, fmt("Faraday %.5f, Voigt %.5f 1/(s T^5)", f, v)};
}

Outcome headline_t1() {
  const double t1 = thermal_t1(spin_flip_rate(kMat, kDonor, 1.75, Geometry::Faraday), 1.75, 1.5, kMat.g_e).t1;
  return {t1 >= kT1Min && t1 <= kT1Max, fmt("T1(Faraday, 1.75 T, 1.5 K) = %.5f s", t1)};
}

Outcome geometry_ratio() {
  double worst = 0.0;
  for (double b = 0.25; b <= 10.0; b += 0.25) {
    const double r = spin_flip_rate(kMat, kDonor, b, Geometry::Faraday) /
                     spin_flip_rate(kMat, kDonor, b, Geometry::Voigt);
    worst = std::max(worst, std::abs(r - 2.0));
  }
  return {worst <= kRatioTol, fmt("max |ratio - 2| = %.3e over 0.25-10 T", worst)};
}

Outcome oracle_equivalence() {
  const std::vector<Geometry> geoms{Geometry::Faraday, Geometry::Voigt};
  const std::vector<double> fields{1.0, 3.0, 5.0, 7.0};
  const auto rep = validate_against_analytic(geoms, fields, kMat, kDonor, sphere_product_rule(kDefaultQuadOrder));
  return {rep.max_rel_err < kOracleTol, fmt("max rel err = %.3e at order 64", rep.max_rel_err)};
}

Outcome field_scaling() {
  const auto rule = sphere_product_rule(kDefaultQuadOrder);
  double worst = 0.0;
  for (double b : {0.5, 1.0, 2.0, 3.5}) {
    const double o = golden_rule_rate(Geometry::Voigt, 2 * b, kMat, kDonor, rule) /
                     golden_rule_rate(Geometry::Voigt, b, kMat, kDonor, rule);
    const double a = spin_flip_rate(kMat, kDonor, 2 * b, Geometry::Voigt) /
                     spin_flip_rate(kMat, kDonor, b, Geometry::Voigt);
    worst = std::max({worst, std::abs(o / 32.0 - 1.0), std::abs(a / 32.0 - 1.0)});
  }
  return {worst <= kScalingTol, fmt("max |G(2B)/G(B)/32 - 1| = %.3e", worst)};
}

RecoveryProtocol t1_protocol(double window) {
  RecoveryProtocol p;
  for (int i = 0; i <= 20; ++i) p.taus.push_back(0.0025 * i);
  p.pump = PumpSegment{Drive{Line::HDown, 1e6}, 500e-6, true};
  p.window = window;
  p.repetitions = 100;
  return p;
}

LevelSystem injected_system() {
  auto s = build_level_system(Geometry::Voigt, 5.0, 1.5, kMat, kDonor);
  s.set_t1(kInjectedT1);
  return s;
}

FitResult recovery_fit(const RecoveryCurve& c) {
  std::vector<double> y, sigma;
  for (std::size_t i = 0; i < c.sampled.size(); ++i) {
    y.push_back(static_cast<double>(c.sampled[i]));
    sigma.push_back(std::max(c.err[i], 1.0));
  }
  return fit_exponential_recovery(c.tau, y, sigma);
}

Outcome simulator_round_trip() {
  const auto system = injected_system();
  EnsembleSpec ens;
  ens.n_donors = 1e6;
  const auto a = run_t1_protocol(system, t1_protocol(100e-6), ens, kSeed);
  const auto b = run_t1_protocol(system, t1_protocol(100e-6), ens, kSeed);
  const auto fit = recovery_fit(a);
  const double t1 = fit.value("T1");
  const bool ok = fit.converged && std::abs(t1 / kInjectedT1 - 1.0) <= kRoundTripTol && a.sampled == b.sampled;
  return {ok, fmt("T1 = %.4f ms (injected 10 ms), seed-reproducible: ", t1 * 1e3) +
                  (a.sampled == b.sampled ? "yes" : "no")};
}

Outcome detailed_balance() {
  auto s = build_level_system(Geometry::Voigt, 5.0, 1.5, kMat, kDonor);
  s.populations = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);
  PulseSequence seq;
  seq.segments = {WaitSegment{50.0 / s.relaxation_rate(), true}};
  seq.bin_width = 1.0 / s.relaxation_rate();
  EnsembleSpec ens;
  ens.sub_ensembles = 1;
  const auto tr = evolve(s, seq, ens);
  const auto& p = tr.segment_populations.back();
  const double expect = std::exp(-s.gamma);
  const double rel = std::abs(p[kUp] / p[kDown] / expect - 1.0);
  return {rel <= kBalanceTol, fmt("p_up/p_down = %.8f vs exp(-gamma) = %.8f", p[kUp] / p[kDown], expect)};
}

Outcome temperature_round_trip() {
  struct Set {
    double gamma, gamma0;  // 1/ms
  };
  bool ok = true;
  std::string detail;
  for (const Set set : {Set{0.1531, 0.0539}, Set{0.1718, -0.0767}}) {
    std::vector<double> temp, t1, sigma;
    for (double t = 1.5; t <= 15.0 + 1e-9; t += 0.5) {
      const double n = phonon_occupation(kMat.g_e * PhysicalConstants::mu_B * 5.0, t);
      const double v = 1.0 / (1e3 * set.gamma * (2.0 * n + 1.0) + 1e3 * set.gamma0);
      temp.push_back(t);
      t1.push_back(v);
      sigma.push_back(0.05 * v);
    }
    const auto fit = fit_temperature_model(temp, t1, 5.0, kMat.g_e, sigma);
    const double g = fit.value("gamma_down_up") * 1e-3, g0 = fit.value("gamma0") * 1e-3;
    ok = ok && fit.converged && std::abs(g - set.gamma) <= fit.error("gamma_down_up") * 1e-3 &&
         std::abs(g0 - set.gamma0) <= fit.error("gamma0") * 1e-3;
    if (!detail.empty()) detail += "; ";
    detail += fmt("(%.4f, ", g) + fmt("%.4f) 1/ms", g0);
  }
  return {ok, detail};
}

Outcome exponent_property() {
  std::vector<double> b, t1;
  for (double x = 2.25; x <= 7.0 + 1e-9; x += 0.25) {
    b.push_back(x);
    t1.push_back(thermal_t1(spin_flip_rate(kMat, kDonor, x, Geometry::Voigt), x, 1.5, kMat.g_e).t1);
  }
  const double n = fit_power_law(b, t1).value("n");
  return {n >= kExponentMin && n <= kExponentMax, fmt("n = %.4f (Voigt, 2.25-7 T, 1.5 K)", n)};
}

double brightest(const Spectrum& s, double lo, double hi) {
  double best = -1.0, at = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < s.energy.size(); ++i) {
    if (s.energy[i] >= lo && s.energy[i] < hi && s.intensity[i] > best) {
      best = s.intensity[i];
      at = s.energy[i];
    }
  }
  return at;
}

Outcome zeeman_pipeline() {
  MaterialParameters mat;
  mat.g_e = 1.97;
  const SpectrumOptions opt;
  std::vector<double> fields, split;
  bool converged = true;
  for (double b = 2.0; b <= 7.0; b += 1.0) {
    const auto s = simulate_spectrum(EnsembleSpec{}, Geometry::Faraday, b, mat, opt);
    LineFitOptions lo;
    lo.init_centers = {brightest(s, s.energy.front(), opt.line_center),
                       brightest(s, opt.line_center, s.energy.back() + 1.0)};
    const auto f = fit_spectral_lines(s.energy, s.intensity, 2, lo);
    converged = converged && f.converged;
    fields.push_back(b);
    split.push_back(f.value("center_1") - f.value("center_0"));
  }
  const double g = fit_zeeman_linear(fields, split).value("g_eff");
  return {converged && std::abs(g - kGEff) <= kGEffTol,
          fmt("g_eff = %.5f, implied g_h_par = %.5f", g, mat.g_e - g)};
}

Outcome window_sensitivity() {
  const auto system = injected_system();
  const EnsembleSpec ens;
  // Slow time constant of the optical-pumping transient.
  PulseSequence op;
  op.segments = {ScrambleSegment{}, PumpSegment{Drive{Line::HDown, 1e6}, 2e-3, true}};
  op.bin_width = 5e-6;
  op.repetitions = 100;
  const auto trace = evolve(system, op, ens, {}, kSeed);
  std::vector<double> t, y, sigma;
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    t.push_back(trace.time[i]);
    y.push_back(static_cast<double>(trace.sampled[i]));
    sigma.push_back(std::max(trace.err[i], 1.0));
  }
  const double t_slow = fit_double_exponential(t, y, sigma).value("t_slow");

  std::vector<double> t1;
  for (double frac : {0.3, 0.45, 0.6, 0.75, 0.9}) {
    t1.push_back(recovery_fit(run_t1_protocol(system, t1_protocol(frac * t_slow), ens, kSeed)).value("T1"));
  }
  const auto [lo, hi] = std::minmax_element(t1.begin(), t1.end());
  const double spread = (*hi - *lo) / *lo;
  return {spread < kWindowTol, fmt("t_slow = %.1f us, T1 spread = %.2f%%", t_slow * 1e6, spread * 100.0)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"lambda coefficient", lambda_check},
      {"rate constants", rate_constants},
      {"headline T1", headline_t1},
      {"geometry ratio", geometry_ratio},
      {"oracle equivalence", oracle_equivalence},
      {"B^5 scaling", field_scaling},
      {"simulator T1 round trip", simulator_round_trip},
      {"detailed balance", detailed_balance},
      {"temperature-model round trip", temperature_round_trip},
      {"power-law exponent", exponent_property},
      {"Zeeman pipeline", zeeman_pipeline},
      {"window sensitivity", window_sensitivity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%2zu] %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
