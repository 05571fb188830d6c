#pragma once

// Rate-equation model of the four-level D⁰ / D⁰X system under optical drive,
// with an inhomogeneously broadened ensemble and Poisson photon counting.
//
// Level order is fixed: 0 = |↓⟩, 1 = |↑⟩, 2 = X with hole ⇓, 3 = X with hole ⇑.
// All energies are in eV, times in s, rates in 1/s.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "donorspin/material.hpp"
#include "donorspin/relaxation.hpp"

namespace donorspin {

enum Level : int { kDown = 0, kUp = 1, kXHoleDown = 2, kXHoleUp = 3 };

/// Optical transitions. Voigt: H/V linearly polarized lines. Faraday: σ±
/// lines and the weak ẑ-dipole lines.
enum class Line { HDown, HUp, VDown, VUp, SigmaPlus, SigmaMinus, ZUp, ZDown };

std::string_view to_string(Line line);
/// Accepts the to_string names ("H_down", "sigma_plus", ...), case-insensitive.
Line parse_line(std::string_view text);

struct OpticalLine {
  Line id = Line::HDown;
  int ground = kDown;
  int excited = kXHoleDown;
  double offset = 0.0;     // transition energy minus the B = 0 line center, eV
  double branching = 0.0;  // decay fraction of `excited` through this line
  double strength = 0.0;   // absorption weight relative to the strongest line
};

struct OpticsConfig {
  double radiative_lifetime = 1e-9;        // s
  double z_branch_ratio = 50.0;            // σ : ẑ emission ratio, Faraday
  double voigt_h_fraction = 0.5;           // H share of each Voigt excited-state decay
  double homogeneous_fwhm = 4.135667696e-6;  // eV, h · 1 GHz
  double line_center = 3.3599;             // eV, B = 0 transition energy
  double gamma0 = 0.0;                     // extra spin-flip rate, split thermally
  double t1_override = 0.0;                // s; > 0 rescales the spin-flip rates
};

struct LevelSystem {
  Geometry geometry = Geometry::Voigt;
  double field_T = 0.0;
  double temperature_K = 0.0;
  Eigen::Vector4d populations = Eigen::Vector4d(0.5, 0.5, 0.0, 0.0);
  double radiative_rate = 1e9;
  std::vector<OpticalLine> lines;
  double spin_flip_down_up = 0.0;  // |↑⟩ → |↓⟩ (phonon emission)
  double spin_flip_up_down = 0.0;  // |↓⟩ → |↑⟩ (phonon absorption)
  double homogeneous_fwhm = 4.135667696e-6;
  double line_center = 3.3599;
  double gamma = 0.0;  // g μB B / kB T; +∞ at T = 0
  /// Optional extra spin-flip rate as a function of optical detuning (eV, 1/s),
  /// linearly interpolated and clamped at the ends.
  std::vector<std::pair<double, double>> gamma0_table;

  const OpticalLine& line(Line id) const;
  bool has_line(Line id) const;
  double branching(int excited, int ground) const;
  /// Σ of the two spin-flip rates, i.e. 1/T1.
  double relaxation_rate() const { return spin_flip_down_up + spin_flip_up_down; }
  /// Rescales both spin-flip rates to give the requested T1, keeping their
  /// detailed-balance ratio.
  void set_t1(double t1);
  /// Ground-state thermal equilibrium with empty excited states.
  Eigen::Vector4d thermal_populations() const;
  void validate() const;
};

LevelSystem build_level_system(Geometry geometry, double field_T, double temperature_K,
                               const MaterialParameters& mat,
                               const DerivedDonorParameters& donor,
                               const OpticsConfig& optics = {});

/// Laser selection. The laser sits at the named line's center (for the
/// unshifted sub-ensemble) plus `detuning`; every line of the same
/// polarization family is driven with its Lorentzian homogeneous response,
/// or every line when `all_polarizations` is set.
struct Drive {
  Line line = Line::HDown;
  double rate = 0.0;  // on-resonance pump rate, 1/s
  double detuning = 0.0;
  bool all_polarizations = false;
};

/// Absolute laser energy of a drive.
double laser_energy(const LevelSystem& system, const Drive& drive);

/// Rate matrix Q with dp/dt = Q p for one sub-ensemble whose optical lines
/// are shifted by `shift`. Driven lines also get stimulated emission.
Eigen::Matrix4d rate_matrix(const LevelSystem& system, const std::optional<Drive>& drive,
                            double shift = 0.0);

/// Steady state of rate_matrix (null vector normalized to one).
Eigen::Vector4d steady_state(const Eigen::Matrix4d& q);

struct EnsembleSpec {
  double n_donors = 1e6;
  double inhomogeneous_fwhm = 84.8e-6;  // eV
  int sub_ensembles = 21;

  void validate() const;
  /// Gaussian detunings at the (k + ½)/K quantiles; each carries weight 1/K.
  std::vector<double> detunings() const;
};

enum class DetectionChannel { Lines, Satellite, All };

struct Detection {
  DetectionChannel channel = DetectionChannel::Satellite;
  std::vector<Line> lines;         // counted lines when channel == Lines
  double efficiency = 1e-3;        // collection × detector efficiency
  double dark_rate = 0.0;          // counts/s
  double satellite_fraction = 0.1; // share of emission in the satellite band
  void validate() const;
};

/// Detected counts per donor per second for each excited level.
Eigen::Vector4d detection_weights(const LevelSystem& system, const Detection& detection);

struct PumpSegment {
  Drive drive;
  double duration = 0.0;
  bool collect = true;
};
struct ProbeSegment {
  Drive drive;
  double duration = 0.0;
  bool collect = true;
};
struct WaitSegment {
  double duration = 0.0;
  bool collect = false;
};
struct ScrambleSegment {};

using Segment = std::variant<PumpSegment, ProbeSegment, WaitSegment, ScrambleSegment>;

struct PulseSequence {
  std::vector<Segment> segments;
  int repetitions = 1;
  Detection detection;
  double bin_width = 1e-6;  // s

  /// Throws ArgumentError naming the offending segment index.
  void validate() const;
};

enum class SolverKind { ExactLinear, FixedStep };

struct SolverOptions {
  SolverKind kind = SolverKind::ExactLinear;
  double step = 1e-9;  // s, fixed-step only
};

SolverKind parse_solver(std::string_view text);

struct TraceRecord {
  std::vector<double> time;      // bin start, s, measured within one repetition
  std::vector<double> bin_width; // s
  std::vector<double> expected;  // counts, summed over repetitions
  std::vector<std::int64_t> sampled;
  std::vector<double> err;       // sqrt(sampled)
  /// Ensemble-averaged populations at the end of each segment (last repetition).
  std::vector<Eigen::Vector4d> segment_populations;
  std::uint64_t seed = 0;
  double n_donors = 0.0;
  int sub_ensembles = 0;
  int repetitions = 0;
  std::string protocol;  // verbatim configuration text, if any

  double total_expected() const;
  std::int64_t total_sampled() const;
};

/// Runs the sequence from system.populations for every sub-ensemble and
/// samples Poisson counts with mt19937_64(seed).
TraceRecord evolve(const LevelSystem& system, const PulseSequence& sequence,
                   const EnsembleSpec& ensemble, const SolverOptions& solver = {},
                   std::uint64_t seed = 0);

/// Populations after `duration` under a constant rate matrix (no ensemble).
Eigen::Vector4d propagate(const Eigen::Matrix4d& q, const Eigen::Vector4d& p0, double duration,
                          const SolverOptions& solver = {});

struct RecoveryCurve {
  std::vector<double> tau;
  std::vector<double> expected;
  std::vector<std::int64_t> sampled;
  std::vector<double> err;
};

struct RecoveryProtocol {
  std::vector<double> taus;  // s, non-negative, ascending
  PumpSegment pump;          // initialization pulse
  std::optional<Drive> probe;  // readout drive; the pump drive when absent
  double window = 0.0;       // integration gate at the start of the readout, s
  int repetitions = 100;
  Detection detection;
  SolverOptions solver;
};

/// Thermal start → pump → wait τ → readout gate (collected), per τ. Each of
/// the repetitions starts from the thermal state; counts add.
/// Shot-noise error bars are sqrt of the sampled counts.
RecoveryCurve run_recovery(const LevelSystem& system, const RecoveryProtocol& protocol,
                           const EnsembleSpec& ensemble, std::uint64_t seed);
/// Readout with the pump drive itself.
RecoveryCurve run_t1_protocol(const LevelSystem& system, RecoveryProtocol protocol,
                              const EnsembleSpec& ensemble, std::uint64_t seed);
/// σ⁺ pump then σ⁻ probe unless the protocol names other lines.
RecoveryCurve run_pump_probe(const LevelSystem& system, RecoveryProtocol protocol,
                             const EnsembleSpec& ensemble, std::uint64_t seed);

struct SpectrumLine {
  Line id = Line::HDown;
  double center = 0.0;  // eV
  double weight = 0.0;
};

struct Spectrum {
  std::vector<double> energy;  // eV
  std::vector<double> intensity;
  std::vector<SpectrumLine> lines;
  std::vector<std::pair<std::string, double>> satellite_labels;
};

struct SpectrumOptions {
  double line_center = 3.3599;
  double lorentzian_fwhm = 6.582119569509066e-7;  // eV, ħ / 1 ns
  double half_range = 2.0e-3;                     // eV around the line center
  double step = 2.0e-6;                           // eV
  double intensity_scale = 1.0;
};

/// Static labels of the satellite band.
std::vector<std::pair<std::string, double>> satellite_labels();

/// Zeeman-split PL spectrum under non-resonant excitation. Faraday shows the
/// σ± lines, Voigt the four H/V lines; each is a Gaussian (inhomogeneous) ⊗
/// Lorentzian profile weighted by its branching fraction.
Spectrum simulate_spectrum(const EnsembleSpec& ensemble, Geometry geometry, double field_T,
                           const MaterialParameters& mat, const SpectrumOptions& options = {});

struct PleCurve {
  std::vector<double> energy;    // laser energy, eV
  std::vector<double> expected;  // counts per point
  std::vector<std::int64_t> sampled;
  std::vector<double> err;
};

struct PleOptions {
  double drive_rate = 1.0;        // 1/s on resonance
  double integration_time = 1.0;  // s per scan point
  double max_excursion = 20e-3;   // eV; scan points must lie this close to the line center
  Detection detection;
};

/// Steady-state collected counts vs laser energy. Voigt drives every line
/// (two ↓-lines split by the hole Zeeman energy fall in a narrow scan);
/// Faraday drives the σ⁺ family.
PleCurve simulate_ple(const EnsembleSpec& ensemble, const LevelSystem& system,
                      std::span<const double> laser_energies, const PleOptions& options,
                      std::uint64_t seed);

/// CSV writers: time_s / tau_s / energy_eV, expected_counts, sampled_counts, err_counts.
void write_trace_csv(std::ostream& out, const TraceRecord& trace);
void write_recovery_csv(std::ostream& out, const RecoveryCurve& curve);
void write_ple_csv(std::ostream& out, const PleCurve& curve);
/// energy_eV,intensity
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);

}  // namespace donorspin
