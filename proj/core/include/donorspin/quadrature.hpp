#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace donorspin {

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

struct QuadratureNode {
  Eigen::Vector3d xi;  // unit direction
  double weight = 0.0;
};

/// Rule on the unit sphere. `degree` is the largest total polynomial degree
/// in (ξx, ξy, ξz) integrated exactly.
struct QuadratureRule {
  std::vector<QuadratureNode> nodes;
  int order = 0;
  int degree = 0;

  /// Σ w f(ξ), accumulated in node order with Neumaier compensation.
  template <class F>
  double integrate(F&& f) const;
};

/// Product rule: `order` Gauss–Legendre nodes in cos θ times 2·order equally
/// spaced azimuths. Exact through degree 2·order − 1.
QuadratureRule sphere_product_rule(int order);

inline constexpr int kDefaultQuadOrder = 64;

/// Compensated accumulator, so repeated evaluations are bit-identical and
/// insensitive to the magnitude spread of the terms.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

template <class F>
double QuadratureRule::integrate(F&& f) const {
  NeumaierSum acc;
  for (const auto& node : nodes) acc.add(node.weight * f(node.xi));
  return acc.value();
}

}  // namespace donorspin
