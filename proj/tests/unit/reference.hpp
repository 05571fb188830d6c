#pragma once

// Independent reference arithmetic for the tests. Constants are restated here
// (CODATA 2018) instead of taken from the library.

#include <cmath>
#include <numbers>

namespace ref {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kE = 1.602176634e-19;
inline constexpr double kH = 6.62607015e-34;
inline constexpr double kHbar = kH / (2.0 * kPi);
inline constexpr double kMuB = 9.2740100783e-24 / kE;  // eV/T, from J/T
inline constexpr double kKB = 1.380649e-23 / kE;       // eV/K, from J/K
inline constexpr double kM0 = 9.1093837015e-31;
inline constexpr double kEps0 = 8.8541878128e-12;
inline constexpr double kRy = 13.605693122994;
inline constexpr double kAH = 5.29177210903e-11;

struct Zno {
  double rho = 5.6e3, eps = 8.1, alpha = 1.1e-3 * 1e-10 * kE;  // α in J·m
  double h33 = 1.5e10, h31 = -0.6e10, h15 = -0.6e10, sl = 6.1e3, st = 2.9e3;
  double g = 2.0, mstar = 0.25;
  double E1s = 54.6e-3 * kE;  // J
};

/// Λ evaluated term by term in SI.
inline double lambda(const Zno& z) {
  const double pre = 9.0 * std::pow(kE * z.alpha, 2) / (448.0 * kPi * z.rho * std::pow(kHbar, 3));
  const double bl = (5 * z.h33 * z.h33 + 8 * z.h31 * z.h31 + 32 * z.h15 * z.h15) / (5 * std::pow(z.sl, 5));
  const double bt = (4 * z.h33 * z.h33 + 4 * z.h31 * z.h31 + 52 * z.h15 * z.h15) / (5 * std::pow(z.st, 5));
  return pre * (bl + bt);
}

/// Zero-temperature spin-flip rate (1/s) in SI.
inline double rate(const Zno& z, double b, bool faraday) {
  const double d1 = z.g * kMuB * b * kE;
  const double wc = kHbar * kE * b / (z.mstar * kM0);
  const double d2 = d1 - wc / 2.0;
  const double l = lambda(z);
  const double e4 = std::pow(z.E1s, 4);
  return faraday ? l * d1 * d1 * d1 * d2 * d2 / (kHbar * e4) : l * std::pow(d1, 5) / (2.0 * kHbar * e4);
}

inline double t1(double gamma, double b, double temp, double g = 2.0) {
  const double x = g * kMuB * b / (kKB * temp);
  return (std::exp(x) - 1.0) / (gamma * (std::exp(x) + 1.0));
}

}  // namespace ref
