#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "donorspin/csv.hpp"
#include "donorspin/dynamics.hpp"
#include "donorspin/errors.hpp"

namespace donorspin {

namespace {

using Matrix5d = Eigen::Matrix<double, 5, 5>;
using Vector5d = Eigen::Matrix<double, 5, 1>;

/// Largest h·ρ on the real axis inside the RK4 stability region.
constexpr double kRk4StabilityLimit = 2.78;

std::string segment_label(std::size_t index) { return "segment " + std::to_string(index); }

double duration_of(const Segment& seg) {
  return std::visit(
      [](const auto& s) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ScrambleSegment>) {
          return 0.0;
        } else {
          return s.duration;
        }
      },
      seg);
}

bool collects(const Segment& seg) {
  return std::visit(
      [](const auto& s) -> bool {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ScrambleSegment>) {
          return false;
        } else {
          return s.collect;
        }
      },
      seg);
}

std::optional<Drive> drive_of(const Segment& seg) {
  if (const auto* p = std::get_if<PumpSegment>(&seg)) return p->drive;
  if (const auto* p = std::get_if<ProbeSegment>(&seg)) return p->drive;
  return std::nullopt;
}

Matrix5d augmented(const Eigen::Matrix4d& q, const Eigen::Vector4d& weights) {
  Matrix5d m = Matrix5d::Zero();
  m.topLeftCorner<4, 4>() = q;
  m.block<1, 4>(4, 0) = weights.transpose();
  return m;
}

Matrix5d matrix_power(Matrix5d base, long long n) {
  Matrix5d result = Matrix5d::Identity();
  while (n > 0) {
    if (n & 1) result = base * result;
    base = base * base;
    n >>= 1;
  }
  return result;
}

/// Propagator over `interval` for dy/dt = M y.
Matrix5d propagator(const Matrix5d& m, double interval, const SolverOptions& solver,
                    const std::string& where) {
  if (interval <= 0.0) return Matrix5d::Identity();
  if (solver.kind == SolverKind::ExactLinear) {
    return (m * interval).exp();
  }
  if (!(solver.step > 0.0)) throw ArgumentError("fixed-step solver needs a positive step");
  const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(interval / solver.step - 1e-9)));
  const double h = interval / static_cast<double>(steps);
  const double rho = 2.0 * m.diagonal().head<4>().cwiseAbs().maxCoeff();
  if (h * rho > kRk4StabilityLimit) {
    throw ArgumentError(where + ": fixed step " + csv::format_number(h) +
                        " s exceeds the RK4 stability limit " +
                        csv::format_number(kRk4StabilityLimit / rho) + " s");
  }
  const Matrix5d a = m * h;
  const Matrix5d a2 = a * a;
  const Matrix5d a3 = a2 * a;
  const Matrix5d a4 = a3 * a;
  const Matrix5d step = Matrix5d::Identity() + a + a2 / 2.0 + a3 / 6.0 + a4 / 24.0;
  return matrix_power(step, steps);
}

struct Bin {
  std::size_t segment = 0;
  double start = 0.0;
  double width = 0.0;
};

struct Expectation {
  std::vector<Bin> bins;
  std::vector<double> expected;
  std::vector<Eigen::Vector4d> segment_populations;
};

Expectation expected_counts(const LevelSystem& system, const PulseSequence& sequence,
                            const EnsembleSpec& ensemble, const SolverOptions& solver) {
  system.validate();
  sequence.validate();
  ensemble.validate();
  for (std::size_t i = 0; i < sequence.segments.size(); ++i) {
    if (const auto d = drive_of(sequence.segments[i]); d && !system.has_line(d->line)) {
      throw ArgumentError(segment_label(i) + ": line " + std::string(to_string(d->line)) +
                          " does not exist in " + std::string(to_string(system.geometry)) +
                          " geometry");
    }
  }

  Expectation out;
  // Bin layout, shared by every sub-ensemble and repetition.
  double t = 0.0;
  for (std::size_t i = 0; i < sequence.segments.size(); ++i) {
    const auto& seg = sequence.segments[i];
    const double d = duration_of(seg);
    if (collects(seg)) {
      const double bw = std::min(sequence.bin_width, d);
      const auto n_full = static_cast<long long>(std::floor(d / bw * (1.0 + 1e-12)));
      for (long long b = 0; b < n_full; ++b) out.bins.push_back({i, t + b * bw, bw});
      const double rest = d - n_full * bw;
      if (rest > 1e-9 * d) out.bins.push_back({i, t + n_full * bw, rest});
    }
    t += d;
  }
  out.expected.assign(out.bins.size(), 0.0);
  out.segment_populations.assign(sequence.segments.size(), Eigen::Vector4d::Zero());

  const Eigen::Vector4d weights = detection_weights(system, sequence.detection);
  const auto shifts = ensemble.detunings();
  const double share = 1.0 / static_cast<double>(shifts.size());

  for (double shift : shifts) {
    // Per-segment propagators for this sub-ensemble, keyed by interval length.
    std::vector<std::map<double, Matrix5d>> props(sequence.segments.size());
    std::vector<Matrix5d> gens(sequence.segments.size());
    for (std::size_t i = 0; i < sequence.segments.size(); ++i) {
      gens[i] = augmented(rate_matrix(system, drive_of(sequence.segments[i]), shift), weights);
    }
    auto prop = [&](std::size_t i, double interval) -> const Matrix5d& {
      auto& cache = props[i];
      auto it = cache.find(interval);
      if (it == cache.end()) {
        it = cache.emplace(interval, propagator(gens[i], interval, solver, segment_label(i))).first;
      }
      return it->second;
    };

    Eigen::Vector4d p = system.populations;
    for (int rep = 0; rep < sequence.repetitions; ++rep) {
      std::size_t bin = 0;
      for (std::size_t i = 0; i < sequence.segments.size(); ++i) {
        const auto& seg = sequence.segments[i];
        if (std::holds_alternative<ScrambleSegment>(seg)) {
          p = Eigen::Vector4d(0.5, 0.5, 0.0, 0.0);
        } else if (collects(seg)) {
          while (bin < out.bins.size() && out.bins[bin].segment == i) {
            Vector5d y;
            y << p, 0.0;
            y = prop(i, out.bins[bin].width) * y;
            p = y.head<4>();
            out.expected[bin] += share * y[4];
            ++bin;
          }
        } else {
          Vector5d y;
          y << p, 0.0;
          p = (prop(i, duration_of(seg)) * y).head<4>();
        }
        if (rep == sequence.repetitions - 1) out.segment_populations[i] += share * p;
      }
    }
  }
  for (std::size_t b = 0; b < out.bins.size(); ++b) {
    out.expected[b] = out.expected[b] * ensemble.n_donors +
                      sequence.detection.dark_rate * out.bins[b].width * sequence.repetitions;
  }
  return out;
}

std::int64_t poisson(std::mt19937_64& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

}  // namespace

SolverKind parse_solver(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "exact" || s == "exact-linear") return SolverKind::ExactLinear;
  if (s == "fixed-step" || s == "rk4") return SolverKind::FixedStep;
  throw ArgumentError("unknown solver '" + std::string(text) + "' (expected exact-linear|fixed-step)");
}

void PulseSequence::validate() const {
  if (segments.empty()) throw ArgumentError("pulse sequence has no segments");
  if (repetitions < 1) throw ArgumentError("repetitions must be >= 1");
  if (!(bin_width > 0.0)) throw ArgumentError("bin width must be positive");
  bool any_collect = false;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (!std::holds_alternative<ScrambleSegment>(seg) && !(duration_of(seg) > 0.0)) {
      throw ArgumentError(segment_label(i) + ": duration must be positive");
    }
    if (const auto d = drive_of(seg); d && d->rate < 0.0) {
      throw ArgumentError(segment_label(i) + ": drive rate must be non-negative");
    }
    any_collect = any_collect || collects(seg);
  }
  if (!any_collect) throw ArgumentError("pulse sequence has no collecting segment");
  detection.validate();
}

double TraceRecord::total_expected() const {
  double s = 0.0;
  for (double e : expected) s += e;
  return s;
}

std::int64_t TraceRecord::total_sampled() const {
  std::int64_t s = 0;
  for (auto c : sampled) s += c;
  return s;
}

TraceRecord evolve(const LevelSystem& system, const PulseSequence& sequence,
                   const EnsembleSpec& ensemble, const SolverOptions& solver,
                   std::uint64_t seed) {
  auto e = expected_counts(system, sequence, ensemble, solver);
  TraceRecord tr;
  tr.seed = seed;
  tr.n_donors = ensemble.n_donors;
  tr.sub_ensembles = ensemble.sub_ensembles;
  tr.repetitions = sequence.repetitions;
  tr.expected = std::move(e.expected);
  tr.segment_populations = std::move(e.segment_populations);
  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < e.bins.size(); ++b) {
    tr.time.push_back(e.bins[b].start);
    tr.bin_width.push_back(e.bins[b].width);
    const auto n = poisson(rng, tr.expected[b]);
    tr.sampled.push_back(n);
    tr.err.push_back(std::sqrt(static_cast<double>(n)));
  }
  return tr;
}

Eigen::Vector4d propagate(const Eigen::Matrix4d& q, const Eigen::Vector4d& p0, double duration,
                          const SolverOptions& solver) {
  if (duration < 0.0) throw ArgumentError("duration must be non-negative");
  Vector5d y;
  y << p0, 0.0;
  return (propagator(augmented(q, Eigen::Vector4d::Zero()), duration, solver, "propagate") * y)
      .head<4>();
}

RecoveryCurve run_recovery(const LevelSystem& system, const RecoveryProtocol& protocol,
                           const EnsembleSpec& ensemble, std::uint64_t seed) {
  if (protocol.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
  if (protocol.taus.empty()) throw ArgumentError("recovery protocol needs at least one delay");
  for (std::size_t i = 0; i < protocol.taus.size(); ++i) {
    if (protocol.taus[i] < 0.0) throw ArgumentError("delays must be non-negative");
    if (i > 0 && protocol.taus[i] < protocol.taus[i - 1]) {
      throw ArgumentError("delays must be sorted ascending");
    }
  }
  if (!(protocol.window > 0.0)) throw ArgumentError("integration window must be positive");
  if (!(protocol.pump.duration > 0.0)) throw ArgumentError("pump duration must be positive");
  const Drive readout = protocol.probe.value_or(protocol.pump.drive);
  if (!protocol.probe && protocol.window > protocol.pump.duration) {
    throw ArgumentError("integration window " + csv::format_number(protocol.window) +
                        " s is longer than the pump segment " +
                        csv::format_number(protocol.pump.duration) + " s");
  }

  LevelSystem start = system;
  start.populations = system.thermal_populations();

  RecoveryCurve curve;
  std::mt19937_64 rng(seed);
  for (double tau : protocol.taus) {
    // Every repetition starts from the same thermal state, so one cycle is
    // evolved and its counts scaled.
    PulseSequence seq;
    seq.repetitions = 1;
    seq.detection = protocol.detection;
    seq.bin_width = protocol.window;
    seq.segments.push_back(PumpSegment{protocol.pump.drive, protocol.pump.duration, false});
    if (tau > 0.0) seq.segments.push_back(WaitSegment{tau, false});
    seq.segments.push_back(ProbeSegment{readout, protocol.window, true});
    const auto e = expected_counts(start, seq, ensemble, protocol.solver);
    double total = 0.0;
    for (double c : e.expected) total += c;
    total *= protocol.repetitions;
    const auto n = poisson(rng, total);
    curve.tau.push_back(tau);
    curve.expected.push_back(total);
    curve.sampled.push_back(n);
    curve.err.push_back(std::sqrt(static_cast<double>(n)));
  }
  return curve;
}

RecoveryCurve run_t1_protocol(const LevelSystem& system, RecoveryProtocol protocol,
                              const EnsembleSpec& ensemble, std::uint64_t seed) {
  protocol.probe.reset();
  return run_recovery(system, protocol, ensemble, seed);
}

RecoveryCurve run_pump_probe(const LevelSystem& system, RecoveryProtocol protocol,
                             const EnsembleSpec& ensemble, std::uint64_t seed) {
  if (!protocol.probe) {
    protocol.probe = Drive{Line::SigmaMinus, protocol.pump.drive.rate, 0.0, false};
  }
  return run_recovery(system, protocol, ensemble, seed);
}

void write_trace_csv(std::ostream& out, const TraceRecord& trace) {
  out << "time_s,expected_counts,sampled_counts,err_counts\n";
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    csv::write_row(out, {csv::format_number(trace.time[i]), csv::format_number(trace.expected[i]),
                         std::to_string(trace.sampled[i]), csv::format_number(trace.err[i])});
  }
}

void write_recovery_csv(std::ostream& out, const RecoveryCurve& curve) {
  out << "tau_s,expected_counts,sampled_counts,err_counts\n";
  for (std::size_t i = 0; i < curve.tau.size(); ++i) {
    csv::write_row(out, {csv::format_number(curve.tau[i]), csv::format_number(curve.expected[i]),
                         std::to_string(curve.sampled[i]), csv::format_number(curve.err[i])});
  }
}

}  // namespace donorspin
