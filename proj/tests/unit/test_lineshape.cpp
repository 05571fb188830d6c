#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "donorspin/fitting.hpp"
#include "donorspin/lineshape.hpp"

using namespace donorspin::lineshape;

namespace {

template <class F>
double trapezoid(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

}  // namespace

TEST(Lineshape, GaussianAreaPeakAndWidth) {
  const double w = 84.8e-6;
  EXPECT_NEAR(trapezoid([&](double x) { return gaussian_pdf(x, w); }, -10 * w, 10 * w, 20000), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(gaussian_peak(0.0, w), 1.0);
  EXPECT_NEAR(gaussian_peak(0.5 * w, w), 0.5, 1e-15);
  EXPECT_NEAR(gaussian_pdf(0.3 * w, w) / gaussian_pdf(0.0, w), gaussian_peak(0.3 * w, w), 1e-15);
}

TEST(Lineshape, LorentzianAreaPeakAndWidth) {
  const double w = 2.0;
  EXPECT_DOUBLE_EQ(lorentzian_peak(0.0, w), 1.0);
  EXPECT_DOUBLE_EQ(lorentzian_peak(1.0, w), 0.5);
  EXPECT_NEAR(lorentzian_pdf(0.0, w), 2.0 / (std::numbers::pi * w), 1e-15);
  EXPECT_NEAR(lorentzian_cdf(0.0, w), 0.5, 1e-15);
  EXPECT_NEAR(lorentzian_cdf(1e9, w) - lorentzian_cdf(-1e9, w), 1.0, 1e-8);
  const double a = -3.0, b = 5.0;
  EXPECT_NEAR(trapezoid([&](double x) { return lorentzian_pdf(x, w); }, a, b, 20000),
              lorentzian_cdf(b, w) - lorentzian_cdf(a, w), 1e-8);
}

TEST(Lineshape, VoigtLimitsAndArea) {
  const double g = 1.0;
  for (double x : {0.0, 0.3, 1.1, 2.5}) {
    EXPECT_NEAR(voigt_pdf(x, g, 0.0), gaussian_pdf(x, g), 1e-12);
  }
  // A narrow Gaussian leaves the Lorentzian.
  EXPECT_NEAR(voigt_pdf(0.7, 1e-4, 1.0) / lorentzian_pdf(0.7, 1.0), 1.0, 1e-4);
  const double l = 0.3;
  const double area = trapezoid([&](double x) { return voigt_pdf(x, g, l, 800); }, -200.0, 200.0, 40000);
  EXPECT_NEAR(area, lorentzian_cdf(200.0, l) - lorentzian_cdf(-200.0, l), 1e-4);
  EXPECT_NEAR(voigt_pdf(0.4, g, l), voigt_pdf(-0.4, g, l), 1e-14);
}

TEST(Lineshape, PseudoVoigtApproximatesVoigt) {
  for (double ratio : {0.0, 0.01, 0.3, 1.0, 3.0}) {
    const double g = 1.0, l = ratio;
    const auto s = tch_pseudo_voigt(g, l);
    EXPECT_GE(s.eta, 0.0);
    EXPECT_LE(s.eta, 1.0);
    const double peak = voigt_pdf(0.0, g, l);
    double worst = 0.0;
    for (double x = -4.0; x <= 4.0; x += 0.05) {
      worst = std::max(worst, std::abs(pseudo_voigt_pdf(x, s.fwhm, s.eta) - voigt_pdf(x, g, l)));
    }
    // The width/mixing formulas alone are good to about 1.3% of the peak.
    EXPECT_LT(worst, 0.015 * peak) << ratio;
  }
  EXPECT_NEAR(tch_pseudo_voigt(1.0, 0.0).fwhm, 1.0, 1e-12);
  EXPECT_NEAR(tch_pseudo_voigt(1.0, 0.0).eta, 0.0, 1e-12);
}

TEST(Lineshape, PseudoVoigtNormalization) {
  EXPECT_DOUBLE_EQ(pseudo_voigt_peak(0.0, 2.0, 0.4), 1.0);
  EXPECT_NEAR(pseudo_voigt_peak(1.0, 2.0, 0.4), 0.5, 1e-15);
  EXPECT_NEAR(trapezoid([&](double x) { return pseudo_voigt_pdf(x, 1.0, 0.0); }, -10, 10, 20000), 1.0, 1e-12);
}

TEST(Lineshape, FittedPseudoVoigtWithinOnePercentOfVoigt) {
  for (double l : {0.1, 0.5, 1.0, 2.0}) {
    const double g = 1.0;
    std::vector<double> x, y;
    for (double e = -6.0; e <= 6.0; e += 0.02) {
      x.push_back(e);
      y.push_back(voigt_pdf(e, g, l));
    }
    const double peak = voigt_pdf(0.0, g, l);
    donorspin::LineFitOptions opt;
    opt.init_centers = {0.0};
    const auto fit = donorspin::fit_spectral_lines(x, y, 1, opt);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double model = fit.value("amplitude_0") *
                               pseudo_voigt_peak(x[i] - fit.value("center_0"), fit.value("fwhm_0"),
                                                 fit.value("eta_0")) +
                           fit.value("background");
      worst = std::max(worst, std::abs(model - y[i]));
    }
    EXPECT_LT(worst, 0.01 * peak) << l;
  }
}
