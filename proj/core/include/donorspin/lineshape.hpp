#pragma once

// Line profiles. "fwhm" arguments are full widths at half maximum in the same
// unit as x. `*_pdf` variants have unit area, `*_peak` variants unit height.

namespace donorspin::lineshape {

inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

double gaussian_pdf(double x, double fwhm);
double gaussian_peak(double x, double fwhm);
double lorentzian_pdf(double x, double fwhm);
double lorentzian_peak(double x, double fwhm);
/// ∫_{-∞}^{x} of the unit-area Lorentzian.
double lorentzian_cdf(double x, double fwhm);

/// Unit-area Gaussian ⊗ Lorentzian by product integration: the Gaussian is
/// sampled at cell midpoints over ±6 FWHM and the Lorentzian is integrated
/// exactly across each cell. Reduces to the Gaussian when fwhm_l = 0.
double voigt_pdf(double x, double fwhm_g, double fwhm_l, int cells = 4000);

/// η·L + (1 − η)·G with a shared FWHM, peak height one.
double pseudo_voigt_peak(double x, double fwhm, double eta);
/// Unit-area pseudo-Voigt.
double pseudo_voigt_pdf(double x, double fwhm, double eta);

struct PseudoVoigtShape {
  double fwhm = 0.0;
  double eta = 0.0;
};
/// Thompson–Cox–Hastings width and mixing parameter approximating the Voigt
/// profile of the given component widths.
PseudoVoigtShape tch_pseudo_voigt(double fwhm_g, double fwhm_l);

}  // namespace donorspin::lineshape
