#include "donorspin/lineshape.hpp"

#include <cmath>
#include <numbers>

#include "donorspin/errors.hpp"

namespace donorspin::lineshape {

namespace {

void require_width(double fwhm) {
  if (!(fwhm > 0.0)) throw ArgumentError("line width must be positive");
}

}  // namespace

double gaussian_pdf(double x, double fwhm) {
  require_width(fwhm);
  const double sigma = fwhm / kFwhmPerSigma;
  const double u = x / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_peak(double x, double fwhm) {
  require_width(fwhm);
  const double u = 2.0 * x / fwhm;
  return std::exp(-std::numbers::ln2 * u * u);
}

double lorentzian_pdf(double x, double fwhm) {
  require_width(fwhm);
  const double g = 0.5 * fwhm;
  return g / (std::numbers::pi * (x * x + g * g));
}

double lorentzian_peak(double x, double fwhm) {
  require_width(fwhm);
  const double u = 2.0 * x / fwhm;
  return 1.0 / (1.0 + u * u);
}

double lorentzian_cdf(double x, double fwhm) {
  require_width(fwhm);
  return 0.5 + std::atan(2.0 * x / fwhm) / std::numbers::pi;
}

double voigt_pdf(double x, double fwhm_g, double fwhm_l, int cells) {
  require_width(fwhm_g);
  if (fwhm_l < 0.0) throw ArgumentError("Lorentzian width must be non-negative");
  if (fwhm_l == 0.0) return gaussian_pdf(x, fwhm_g);
  if (cells < 2) throw ArgumentError("voigt_pdf needs at least two cells");
  const double half_span = 6.0 * fwhm_g;
  const double dt = 2.0 * half_span / cells;
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double a = -half_span + i * dt;
    const double b = a + dt;
    const double g = gaussian_pdf(0.5 * (a + b), fwhm_g);
    // ∫_a^b L(x − t) dt
    sum += g * (lorentzian_cdf(x - a, fwhm_l) - lorentzian_cdf(x - b, fwhm_l));
  }
  return sum;
}

double pseudo_voigt_peak(double x, double fwhm, double eta) {
  return eta * lorentzian_peak(x, fwhm) + (1.0 - eta) * gaussian_peak(x, fwhm);
}

double pseudo_voigt_pdf(double x, double fwhm, double eta) {
  return eta * lorentzian_pdf(x, fwhm) + (1.0 - eta) * gaussian_pdf(x, fwhm);
}

PseudoVoigtShape tch_pseudo_voigt(double fwhm_g, double fwhm_l) {
  if (fwhm_g < 0.0 || fwhm_l < 0.0 || fwhm_g + fwhm_l <= 0.0) {
    throw ArgumentError("TCH widths must be non-negative and not both zero");
  }
  const double g = fwhm_g;
  const double l = fwhm_l;
  const double f5 = std::pow(g, 5) + 2.69269 * std::pow(g, 4) * l +
                    2.42843 * std::pow(g, 3) * l * l + 4.47163 * g * g * std::pow(l, 3) +
                    0.07842 * g * std::pow(l, 4) + std::pow(l, 5);
  const double f = std::pow(f5, 0.2);
  const double r = l / f;
  const double eta = 1.36603 * r - 0.47719 * r * r + 0.11116 * r * r * r;
  return {f, eta};
}

}  // namespace donorspin::lineshape
