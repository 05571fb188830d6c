#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "donorspin/constants.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/dynamics.hpp"
#include "donorspin/fitting.hpp"

using namespace donorspin;

namespace {

const MaterialParameters kMat{};
const DerivedDonorParameters kDonor = derive_donor(kMat);

LevelSystem voigt(double b = 5.0, double temp = 1.5) {
  return build_level_system(Geometry::Voigt, b, temp, kMat, kDonor);
}

EnsembleSpec single_ensemble(double n = 1e6) {
  EnsembleSpec e;
  e.n_donors = n;
  e.sub_ensembles = 1;
  return e;
}

PulseSequence op_sequence(double duration = 2e-3, double bin = 5e-6) {
  PulseSequence seq;
  seq.segments = {ScrambleSegment{}, PumpSegment{Drive{Line::HDown, 1e6}, duration, true}};
  seq.bin_width = bin;
  return seq;
}

RecoveryProtocol t1_protocol() {
  RecoveryProtocol p;
  for (int i = 0; i <= 20; ++i) p.taus.push_back(0.0025 * i);
  p.pump = PumpSegment{Drive{Line::HDown, 1e6}, 500e-6, true};
  p.window = 100e-6;
  p.repetitions = 100;
  return p;
}

std::vector<double> sigma_floor(const RecoveryCurve& c) {
  std::vector<double> s;
  for (double e : c.err) s.push_back(std::max(e, 1.0));
  return s;
}

std::vector<double> as_double(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(LevelSystem, FaradayBranching) {
  const auto s = build_level_system(Geometry::Faraday, 5.0, 1.5, kMat, kDonor);
  for (int x : {kXHoleDown, kXHoleUp}) {
    const double a = s.branching(x, kDown), b = s.branching(x, kUp);
    EXPECT_NEAR(a + b, 1.0, 1e-15);
    EXPECT_NEAR(std::min(a, b), 1.0 / 51.0, 1e-15);
    EXPECT_NEAR(std::min(a, b), 0.0196, 1e-4);
  }
  EXPECT_TRUE(s.has_line(Line::SigmaPlus));
  EXPECT_FALSE(s.has_line(Line::HDown));
}

TEST(LevelSystem, VoigtBranching) {
  const auto s = voigt();
  for (int x : {kXHoleDown, kXHoleUp}) {
    EXPECT_EQ(s.branching(x, kDown), 0.5);
    EXPECT_EQ(s.branching(x, kUp), 0.5);
  }
  EXPECT_EQ(s.lines.size(), 4u);
}

TEST(LevelSystem, ThermalRatio) {
  const auto s = voigt(5.0, 1.5);
  const double ratio = s.spin_flip_up_down / s.spin_flip_down_up;
  EXPECT_NEAR(ratio, std::exp(-s.gamma), 1e-12 * ratio);
  EXPECT_NEAR(s.gamma, 4.48, 0.01);
  EXPECT_NEAR(ratio, 0.0113, 1e-4);
  EXPECT_NEAR(1.0 / s.relaxation_rate(), 7.807e-3, 1e-5);
}

TEST(LevelSystem, SetT1KeepsDetailedBalance) {
  auto s = voigt();
  const double before = s.spin_flip_up_down / s.spin_flip_down_up;
  s.set_t1(0.01);
  EXPECT_NEAR(1.0 / s.relaxation_rate(), 0.01, 1e-15);
  EXPECT_NEAR(s.spin_flip_up_down / s.spin_flip_down_up, before, 1e-14);
}

TEST(LevelSystem, InvalidOptics) {
  OpticsConfig o;
  o.radiative_lifetime = 0.0;
  EXPECT_THROW(build_level_system(Geometry::Voigt, 5.0, 1.5, kMat, kDonor, o), ArgumentError);
  o = {};
  o.homogeneous_fwhm = -1.0;
  EXPECT_THROW(build_level_system(Geometry::Voigt, 5.0, 1.5, kMat, kDonor, o), ArgumentError);
  EXPECT_THROW(build_level_system(Geometry::Voigt, -1.0, 1.5, kMat, kDonor), ArgumentError);
  EXPECT_THROW(parse_line("H_sideways"), ArgumentError);
  EXPECT_EQ(parse_line("SIGMA_PLUS"), Line::SigmaPlus);
}

TEST(Evolve, NullDynamicsGivesConstantTrace) {
  auto s = voigt();
  s.spin_flip_down_up = s.spin_flip_up_down = 0.0;
  s.populations = Eigen::Vector4d(0.3, 0.7, 0.0, 0.0);
  PulseSequence seq;
  seq.segments = {WaitSegment{1e-3, true}};
  seq.bin_width = 1e-5;
  seq.detection.dark_rate = 1e4;
  const auto tr = evolve(s, seq, single_ensemble());
  ASSERT_EQ(tr.expected.size(), 100u);
  for (double e : tr.expected) EXPECT_NEAR(e, tr.expected.front(), 1e-12 * tr.expected.front());
  EXPECT_NEAR(tr.expected.front(), 1e4 * 1e-5, 1e-12);
  EXPECT_LT((tr.segment_populations[0] - s.populations).norm(), 1e-9);
}

TEST(Evolve, OpticalPumpingEmptiesDrivenLevel) {
  auto s = voigt(5.5);
  const auto tr = evolve(s, op_sequence(), single_ensemble());
  const auto& end = tr.segment_populations.back();
  EXPECT_LT(end[kDown], 1e-2);
  EXPECT_GT(end[kUp], 0.98);
  EXPECT_LT(tr.expected.back(), 0.05 * tr.expected.front());
  for (std::size_t i = 1; i < tr.expected.size(); ++i) {
    EXPECT_LE(tr.expected[i], tr.expected[i - 1] * (1.0 + 1e-12));
  }
}

TEST(Evolve, FixedStepMatchesExact) {
  auto s = voigt(5.5);
  EnsembleSpec ens;
  ens.n_donors = 1e6;
  ens.sub_ensembles = 5;
  const auto seq = op_sequence(5e-4, 5e-6);
  const auto exact = evolve(s, seq, ens);
  const auto fixed = evolve(s, seq, ens, SolverOptions{SolverKind::FixedStep, 2e-10});
  ASSERT_EQ(exact.expected.size(), fixed.expected.size());
  for (std::size_t i = 0; i < exact.expected.size(); ++i) {
    EXPECT_NEAR(fixed.expected[i], exact.expected[i], 1e-6 * exact.expected[i]) << i;
  }
  for (std::size_t k = 0; k < exact.segment_populations.size(); ++k) {
    EXPECT_LT((fixed.segment_populations[k] - exact.segment_populations[k]).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Evolve, PopulationsStayNormalized) {
  auto s = voigt(5.5);
  PulseSequence seq;
  seq.segments = {ScrambleSegment{}, PumpSegment{Drive{Line::HDown, 1e7}, 1e-4, true},
                  WaitSegment{1e-3, false}, ProbeSegment{Drive{Line::VUp, 1e7}, 1e-4, true}};
  seq.bin_width = 1e-6;
  for (auto kind : {SolverKind::ExactLinear, SolverKind::FixedStep}) {
    const auto tr = evolve(s, seq, single_ensemble(), SolverOptions{kind, 1e-9});
    for (const auto& p : tr.segment_populations) {
      EXPECT_NEAR(p.sum(), 1.0, 1e-9);
      EXPECT_GE(p.minCoeff(), -1e-12);
    }
  }
}

TEST(Evolve, UnstableStepNamesSegment) {
  auto s = voigt(5.5);
  try {
    evolve(s, op_sequence(1e-4), single_ensemble(), SolverOptions{SolverKind::FixedStep, 1e-6});
    FAIL() << "expected an error";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("segment 1"), std::string::npos) << e.what();
  }
}

TEST(Evolve, DetailedBalanceAtEquilibrium) {
  for (double temp : {1.5, 4.2, 10.0}) {
    const auto s = voigt(5.0, temp);
    const Eigen::Matrix4d q = rate_matrix(s, std::nullopt);
    const auto p = propagate(q, Eigen::Vector4d(1, 0, 0, 0), 100.0 / s.relaxation_rate());
    EXPECT_NEAR(p[kUp] / p[kDown], std::exp(-s.gamma), 1e-6 * std::exp(-s.gamma));
    const auto ss = steady_state(q);
    EXPECT_NEAR(ss[kUp] / ss[kDown], std::exp(-s.gamma), 1e-6 * std::exp(-s.gamma));
    EXPECT_LT((s.thermal_populations() - ss).norm(), 1e-9);
  }
}

TEST(Evolve, SeededRunsAreBitIdentical) {
  const auto s = voigt(5.5);
  EnsembleSpec ens;
  const auto a = evolve(s, op_sequence(), ens, {}, 7);
  const auto b = evolve(s, op_sequence(), ens, {}, 7);
  const auto c = evolve(s, op_sequence(), ens, {}, 8);
  EXPECT_EQ(a.sampled, b.sampled);
  EXPECT_EQ(a.expected, b.expected);
  EXPECT_NE(a.sampled, c.sampled);
  for (auto n : a.sampled) EXPECT_GE(n, 0);
}

TEST(Evolve, SampledCountsArePoisson) {
  const auto s = voigt(5.5);
  auto seq = op_sequence(1e-3, 1e-6);
  seq.repetitions = 100;
  const auto tr = evolve(s, seq, EnsembleSpec{}, {}, 2024);
  ASSERT_EQ(tr.expected.size(), 1000u);
  double chi2 = 0.0;
  double var = 0.0;  // Var of the Pearson term for Poisson data: 2 + 1/μ
  for (std::size_t i = 0; i < tr.expected.size(); ++i) {
    ASSERT_GT(tr.expected[i], 1.0);
    chi2 += std::pow(tr.sampled[i] - tr.expected[i], 2) / tr.expected[i];
    var += 2.0 + 1.0 / tr.expected[i];
  }
  const double n = 1000.0;
  EXPECT_LT(std::abs(chi2 - n), 3.0 * std::sqrt(var));
  EXPECT_NEAR(static_cast<double>(tr.total_sampled()) / tr.total_expected(), 1.0,
              3.0 / std::sqrt(tr.total_expected()));
}

TEST(Evolve, EnsembleTraceNeedsTwoExponentials) {
  const auto s = voigt(5.5);
  auto seq = op_sequence();
  seq.repetitions = 100;
  const auto tr = evolve(s, seq, EnsembleSpec{}, {}, 3);
  std::vector<double> t, y, sig;
  for (std::size_t i = 0; i < tr.time.size(); ++i) {
    t.push_back(tr.time[i]);
    y.push_back(static_cast<double>(tr.sampled[i]));
    sig.push_back(std::max(tr.err[i], 1.0));
  }
  const auto one = fit_exponential_decay(t, y, sig);
  const auto two = fit_double_exponential(t, y, sig);
  EXPECT_FALSE(two.has_flag("single_exponential_fallback"));
  EXPECT_LT(two.residual_norm, one.residual_norm);
  EXPECT_GT(std::pow(one.residual_norm, 2) / one.dof, 2.0 * std::pow(two.residual_norm, 2) / two.dof);
  EXPECT_LT(two.value("t_fast"), 0.2 * two.value("t_slow"));
}

TEST(Evolve, SequenceValidation) {
  const auto s = voigt();
  PulseSequence seq;
  EXPECT_THROW(evolve(s, seq, EnsembleSpec{}), ArgumentError);
  seq.segments = {WaitSegment{1e-3, false}};
  EXPECT_THROW(evolve(s, seq, EnsembleSpec{}), ArgumentError);
  seq.segments = {PumpSegment{Drive{Line::SigmaPlus, 1e6}, 1e-4, true}};
  try {
    evolve(s, seq, EnsembleSpec{});
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("segment 0"), std::string::npos);
  }
  seq.segments = {ScrambleSegment{}, PumpSegment{Drive{Line::HDown, 1e6}, -1.0, true}};
  try {
    evolve(s, seq, EnsembleSpec{});
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("segment 1"), std::string::npos);
  }
  EnsembleSpec bad;
  bad.sub_ensembles = 0;
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = {};
  bad.inhomogeneous_fwhm = 0.0;
  EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(Ensemble, QuantileDetunings) {
  EnsembleSpec e;
  const auto d = e.detunings();
  ASSERT_EQ(d.size(), 21u);
  EXPECT_NEAR(d[10], 0.0, 1e-18);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], -d[d.size() - 1 - i], 1e-18);
  const double mean_sq = std::inner_product(d.begin(), d.end(), d.begin(), 0.0) / d.size();
  const double sigma = e.inhomogeneous_fwhm / 2.3548200450309493;
  EXPECT_NEAR(std::sqrt(mean_sq) / sigma, 1.0, 0.1);
}

TEST(Recovery, RoundTripOfInjectedT1) {
  auto s = voigt();
  s.set_t1(0.01);
  const auto c = run_t1_protocol(s, t1_protocol(), EnsembleSpec{}, 42);
  const auto fit = fit_exponential_recovery(c.tau, as_double(c.sampled), sigma_floor(c));
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.value("T1") / 0.01, 1.0, 0.05);
  const auto again = run_t1_protocol(s, t1_protocol(), EnsembleSpec{}, 42);
  EXPECT_EQ(c.sampled, again.sampled);
}

TEST(Recovery, MinimumAtZeroDelayAndSaturation) {
  auto s = voigt();
  s.set_t1(0.01);
  auto p = t1_protocol();
  p.taus = {0.0, 0.005, 0.2, 0.3};
  const auto c = run_t1_protocol(s, p, EnsembleSpec{}, 1);
  EXPECT_EQ(std::min_element(c.expected.begin(), c.expected.end()) - c.expected.begin(), 0);
  EXPECT_LT(c.expected[0], c.expected[1]);
  EXPECT_NEAR(c.expected[2], c.expected[3], 1e-6 * c.expected[3]);
  for (std::size_t i = 0; i < c.sampled.size(); ++i) {
    EXPECT_EQ(c.err[i], std::sqrt(static_cast<double>(c.sampled[i])));
  }
}

TEST(Recovery, ProtocolErrors) {
  const auto s = voigt();
  auto p = t1_protocol();
  p.window = 1e-3;
  EXPECT_THROW(run_t1_protocol(s, p, EnsembleSpec{}, 1), ArgumentError);
  p = t1_protocol();
  p.taus = {0.002, 0.001};
  EXPECT_THROW(run_t1_protocol(s, p, EnsembleSpec{}, 1), ArgumentError);
  p.taus = {-1.0};
  EXPECT_THROW(run_t1_protocol(s, p, EnsembleSpec{}, 1), ArgumentError);
}

TEST(PumpProbe, SignalAndPumpDurationInsensitivity) {
  auto s = build_level_system(Geometry::Faraday, 5.0, 1.9, kMat, kDonor);
  s.set_t1(0.01);
  auto p = t1_protocol();
  p.pump.drive.line = Line::SigmaPlus;
  p.probe = Drive{Line::SigmaMinus, 1e6};
  std::vector<double> t1;
  for (double on : {50e-6, 500e-6}) {
    p.pump.duration = on;
    p.window = std::min(100e-6, on);
    const auto c = run_pump_probe(s, p, EnsembleSpec{}, 9);
    EXPECT_EQ(std::max_element(c.expected.begin(), c.expected.end()) - c.expected.begin(), 0);
    const auto fit = fit_exponential_recovery(c.tau, as_double(c.sampled), sigma_floor(c));
    EXPECT_TRUE(fit.converged);
    t1.push_back(fit.value("T1"));
  }
  EXPECT_LT(std::max(t1[0], t1[1]) / std::min(t1[0], t1[1]), 1.2);
  EXPECT_NEAR(t1[1] / 0.01, 1.0, 0.05);
}

TEST(Spectrum, ZeroFieldLine) {
  const auto sp = simulate_spectrum(EnsembleSpec{}, Geometry::Faraday, 0.0, kMat);
  const auto peak = std::max_element(sp.intensity.begin(), sp.intensity.end()) - sp.intensity.begin();
  EXPECT_NEAR(sp.energy[static_cast<std::size_t>(peak)], 3.3599, 2e-6);
  for (const auto& l : sp.lines) EXPECT_NEAR(l.center, 3.3599, 1e-15);
  EXPECT_EQ(sp.satellite_labels.size(), 4u);
}

TEST(Spectrum, FaradaySplitting) {
  MaterialParameters m;
  m.g_e = 1.97;
  const auto sp = simulate_spectrum(EnsembleSpec{}, Geometry::Faraday, 5.0, m);
  ASSERT_EQ(sp.lines.size(), 2u);
  const double split = std::abs(sp.lines[0].center - sp.lines[1].center);
  EXPECT_NEAR(split, 923e-6, 2e-6);
  EXPECT_NEAR(split, 3.19 * PhysicalConstants::mu_B * 5.0, 1e-12);

  LineFitOptions opt;
  opt.init_centers = {std::min(sp.lines[0].center, sp.lines[1].center),
                      std::max(sp.lines[0].center, sp.lines[1].center)};
  const auto fit = fit_spectral_lines(sp.energy, sp.intensity, 2, opt);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.value("center_1") - fit.value("center_0"), 923e-6, 2e-6);
}

TEST(Spectrum, FittedWidthMatchesInhomogeneousBroadening) {
  const auto sp = simulate_spectrum(EnsembleSpec{}, Geometry::Faraday, 0.0, kMat);
  LineFitOptions opt;
  opt.init_centers = {3.3599};
  const auto fit = fit_spectral_lines(sp.energy, sp.intensity, 1, opt);
  EXPECT_NEAR(fit.value("fwhm_0") / 84.8e-6, 1.0, 0.02);
}

TEST(Spectrum, VoigtFourLines) {
  const auto sp = simulate_spectrum(EnsembleSpec{}, Geometry::Voigt, 5.0, kMat);
  ASSERT_EQ(sp.lines.size(), 4u);
  std::vector<double> c;
  for (const auto& l : sp.lines) c.push_back(l.center);
  std::sort(c.begin(), c.end());
  const double ge = kMat.g_e * PhysicalConstants::mu_B * 5.0, gh = std::abs(kMat.g_h_perp) * PhysicalConstants::mu_B * 5.0;
  EXPECT_NEAR(c[3] - c[0], ge + gh, 1e-12);
  EXPECT_NEAR(c[1] - c[0], std::min(ge, gh), 1e-12);
  std::ostringstream out;
  write_spectrum_csv(out, sp);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "energy_eV,intensity");
}

namespace {

/// Local maxima above half the curve maximum.
std::vector<double> ple_peaks(const PleCurve& c) {
  const double top = *std::max_element(c.expected.begin(), c.expected.end());
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < c.expected.size(); ++i) {
    if (c.expected[i] > 0.5 * top && c.expected[i] > c.expected[i - 1] && c.expected[i] >= c.expected[i + 1]) {
      peaks.push_back(c.energy[i]);
    }
  }
  return peaks;
}

std::vector<double> scan(double center, double lo, double hi, double step) {
  std::vector<double> e;
  for (int i = 0; lo + i * step <= hi + 1e-12; ++i) e.push_back(center + lo + i * step);
  return e;
}

}  // namespace

TEST(Ple, VoigtTwoPeaksSplitByHoleZeeman) {
  const auto s = voigt(5.0);
  EnsembleSpec ens;
  ens.sub_ensembles = 401;
  const double ref = laser_energy(s, Drive{Line::HDown});
  const auto c = simulate_ple(ens, s, scan(ref, -3e-4, 4e-4, 2e-6), PleOptions{}, 5);
  // The two lines overlap, so their centers come from a two-line fit.
  LineFitOptions opt;
  opt.init_centers = {ref - 1e-4, ref};
  const auto fit = fit_spectral_lines(c.energy, c.expected, 2, opt);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.value("center_1") - fit.value("center_0"), 98.4e-6, 0.5e-6);
  EXPECT_NEAR(fit.value("center_1") - fit.value("center_0"),
              std::abs(kMat.g_h_perp) * PhysicalConstants::mu_B * 5.0, 0.5e-6);
}

TEST(Ple, FaradaySinglePeakAtSigmaPlus) {
  const auto s = build_level_system(Geometry::Faraday, 5.0, 1.5, kMat, kDonor);
  EnsembleSpec ens;
  ens.sub_ensembles = 401;
  const double ref = laser_energy(s, Drive{Line::SigmaPlus});
  const auto c = simulate_ple(ens, s, scan(ref, -3e-4, 3e-4, 2e-6), PleOptions{}, 5);
  const auto peaks = ple_peaks(c);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks[0], ref, 2e-6);
}

TEST(Ple, ZeroPowerIsDark) {
  const auto s = voigt(5.0);
  PleOptions o;
  o.drive_rate = 0.0;
  const double ref = laser_energy(s, Drive{Line::HDown});
  const auto c = simulate_ple(EnsembleSpec{}, s, scan(ref, -1e-4, 1e-4, 1e-5), o, 5);
  for (std::size_t i = 0; i < c.expected.size(); ++i) {
    EXPECT_EQ(c.expected[i], 0.0);
    EXPECT_EQ(c.sampled[i], 0);
  }
  EXPECT_THROW(simulate_ple(EnsembleSpec{}, s, std::vector<double>{ref + 1.0}, PleOptions{}, 5), ArgumentError);
}

TEST(Csv, RecoveryHeader) {
  RecoveryCurve c{{0.0}, {1.0}, {1}, {1.0}};
  std::ostringstream out;
  write_recovery_csv(out, c);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "tau_s,expected_counts,sampled_counts,err_counts");
}
