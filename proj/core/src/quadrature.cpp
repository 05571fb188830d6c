#include "donorspin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "donorspin/errors.hpp"

namespace donorspin {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("Gauss-Legendre order must be >= 1");
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[i] = -x;
    gl.nodes[n - 1 - i] = x;
    gl.weights[i] = w;
    gl.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) gl.nodes[n / 2] = 0.0;
  return gl;
}

QuadratureRule sphere_product_rule(int order) {
  if (order < 1) throw ArgumentError("quadrature order must be >= 1");
  const auto gl = gauss_legendre(order);
  const int n_phi = 2 * order;
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  QuadratureRule rule;
  rule.order = order;
  rule.degree = 2 * order - 1;
  rule.nodes.reserve(static_cast<std::size_t>(order) * n_phi);
  for (int i = 0; i < order; ++i) {
    const double c = gl.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      rule.nodes.push_back({Eigen::Vector3d(s * std::cos(phi), s * std::sin(phi), c),
                            gl.weights[i] * dphi});
    }
  }
  return rule;
}

}  // namespace donorspin
