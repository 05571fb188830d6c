#include <cmath>
#include <ostream>
#include <random>

#include "donorspin/constants.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/dynamics.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/lineshape.hpp"

namespace donorspin {

std::vector<std::pair<std::string, double>> satellite_labels() {
  return {{"TES", 3.318}, {"1LO", 3.288}, {"1LO-TES", 3.247}, {"2LO", 3.214}};
}

Spectrum simulate_spectrum(const EnsembleSpec& ensemble, Geometry geometry, double field_T,
                           const MaterialParameters& mat, const SpectrumOptions& options) {
  ensemble.validate();
  if (field_T < 0.0) throw ArgumentError("magnetic field must be non-negative");
  if (!(options.step > 0.0) || !(options.half_range > 0.0)) {
    throw ArgumentError("spectrum grid needs positive step and range");
  }
  if (options.lorentzian_fwhm < 0.0) throw ArgumentError("Lorentzian width must be non-negative");

  OpticsConfig optics;
  optics.line_center = options.line_center;
  const LevelSystem sys = build_level_system(geometry, field_T, 0.0, mat,
                                             DerivedDonorParameters{1.5e-9, 54.6e-3, 0.0, 0.0},
                                             optics);
  Spectrum out;
  for (const auto& l : sys.lines) {
    // ẑ dipoles do not radiate along the field in Faraday geometry.
    if (l.id == Line::ZUp || l.id == Line::ZDown) continue;
    // Both excited states are equally populated under above-band excitation.
    out.lines.push_back({l.id, options.line_center + l.offset, 0.5 * l.branching});
  }
  out.satellite_labels = satellite_labels();

  const auto n = static_cast<long long>(std::floor(2.0 * options.half_range / options.step + 1e-9));
  out.energy.reserve(static_cast<std::size_t>(n + 1));
  for (long long i = 0; i <= n; ++i) {
    const double e = options.line_center - options.half_range + i * options.step;
    double y = 0.0;
    for (const auto& l : out.lines) {
      y += l.weight * lineshape::voigt_pdf(e - l.center, ensemble.inhomogeneous_fwhm,
                                           options.lorentzian_fwhm);
    }
    out.energy.push_back(e);
    out.intensity.push_back(options.intensity_scale * ensemble.n_donors * y);
  }
  return out;
}

PleCurve simulate_ple(const EnsembleSpec& ensemble, const LevelSystem& system,
                      std::span<const double> laser_energies, const PleOptions& options,
                      std::uint64_t seed) {
  ensemble.validate();
  system.validate();
  if (options.drive_rate < 0.0) throw ArgumentError("drive rate must be non-negative");
  if (!(options.integration_time > 0.0)) throw ArgumentError("integration time must be positive");
  for (double e : laser_energies) {
    if (!(std::abs(e - system.line_center) <= options.max_excursion)) {
      throw ArgumentError("scan point " + csv::format_number(e) +
                          " eV lies outside the configured range");
    }
  }
  const Eigen::Vector4d weights = detection_weights(system, options.detection);
  const auto shifts = ensemble.detunings();
  const double share = 1.0 / static_cast<double>(shifts.size());
  const bool voigt = system.geometry == Geometry::Voigt;
  const Line reference = voigt ? Line::HDown : Line::SigmaPlus;
  const double reference_energy = system.line_center + system.line(reference).offset;

  PleCurve out;
  std::mt19937_64 rng(seed);
  for (double e : laser_energies) {
    const Drive drive{reference, options.drive_rate, e - reference_energy, voigt};
    double flux = 0.0;
    for (double shift : shifts) {
      const auto p = steady_state(rate_matrix(system, drive, shift));
      flux += share * weights.dot(p);
    }
    const double expected = (flux * ensemble.n_donors + options.detection.dark_rate) *
                            options.integration_time;
    std::int64_t n = 0;
    if (expected > 0.0) n = std::poisson_distribution<std::int64_t>(expected)(rng);
    out.energy.push_back(e);
    out.expected.push_back(expected);
    out.sampled.push_back(n);
    out.err.push_back(std::sqrt(static_cast<double>(n)));
  }
  return out;
}

void write_ple_csv(std::ostream& out, const PleCurve& curve) {
  out << "energy_eV,expected_counts,sampled_counts,err_counts\n";
  for (std::size_t i = 0; i < curve.energy.size(); ++i) {
    csv::write_row(out, {csv::format_number(curve.energy[i]), csv::format_number(curve.expected[i]),
                         std::to_string(curve.sampled[i]), csv::format_number(curve.err[i])});
  }
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum) {
  out << "energy_eV,intensity\n";
  for (std::size_t i = 0; i < spectrum.energy.size(); ++i) {
    csv::write_row(out, {csv::format_number(spectrum.energy[i]),
                         csv::format_number(spectrum.intensity[i])});
  }
}

}  // namespace donorspin
