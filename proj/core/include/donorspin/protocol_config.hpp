#pragma once

// JSON protocol documents for the simulator.
//
//   {
//     "kind": "trace" | "t1" | "pump_probe" | "spectrum" | "ple",
//     "geometry": "voigt", "B_T": 5.5, "T_K": 1.5,
//     "optics":    { "radiative_lifetime_s", "z_branch_ratio", "voigt_h_fraction",
//                    "homogeneous_fwhm_eV", "line_center_eV", "gamma0_s", "t1_override_s" },
//     "ensemble":  { "n_donors", "inhomogeneous_fwhm_eV", "sub_ensembles" },
//     "detection": { "channel": "satellite" | "lines" | "all", "lines": [...],
//                    "efficiency", "dark_rate_s", "satellite_fraction" },
//     "solver":    { "kind": "exact-linear" | "fixed-step", "step_s" },
//
//     trace:      "segments": [ { "type": "pump" | "probe" | "wait" | "scramble",
//                                 "line", "rate_s", "duration_s", "detuning_eV",
//                                 "collect", "all_polarizations" } ... ],
//                 "repetitions", "bin_width_s", "initial": "thermal" | [4 numbers]
//     t1 / pump_probe:
//                 "pump": { "line", "rate_s", "duration_s", "detuning_eV" },
//                 "probe": { "line", "rate_s", "detuning_eV" },
//                 "taus_s": [..] | "start:stop:step", "window_s", "repetitions"
//     spectrum:   "half_range_eV", "step_eV", "lorentzian_fwhm_eV"
//     ple:        "scan_detuning_eV": [..] | "start:stop:step" (relative to the
//                 reference line), "drive_rate_s", "integration_time_s"
//   }
//
// Times in s, energies in eV, rates in 1/s.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "donorspin/dynamics.hpp"

namespace donorspin {

enum class ProtocolKind { Trace, T1, PumpProbe, Spectrum, Ple };

std::string_view to_string(ProtocolKind kind);

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::Trace;
  Geometry geometry = Geometry::Voigt;
  double field_T = 0.0;
  double temperature_K = 1.5;
  OpticsConfig optics;
  EnsembleSpec ensemble;
  SolverOptions solver;
  PulseSequence sequence;                  // trace
  std::optional<Eigen::Vector4d> initial;  // trace; thermal when absent
  RecoveryProtocol recovery;               // t1, pump_probe
  SpectrumOptions spectrum;                // spectrum
  std::vector<double> scan_detuning;       // ple, relative to the reference line
  PleOptions ple;                          // ple
  std::string text;                        // the document as read
  std::vector<std::string> warnings;       // unknown keys
};

/// Parses a protocol document. Throws ConfigError whose path names the
/// offending key, e.g. "$.segments[2].duration_s".
ProtocolConfig parse_protocol(std::string_view json_text);
ProtocolConfig load_protocol_file(const std::filesystem::path& path);

/// "start:stop:step" (stop included up to rounding), "a,b,c", or a
/// single number. Throws ArgumentError.
std::vector<double> parse_grid(std::string_view text);

}  // namespace donorspin
