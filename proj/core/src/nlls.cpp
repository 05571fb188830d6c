#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "donorspin/errors.hpp"
#include "donorspin/fitting.hpp"

namespace donorspin {

int FitResult::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double FitResult::value(std::string_view name) const {
  const int i = index(name);
  if (i < 0) throw ArgumentError("fit result has no parameter '" + std::string(name) + "'");
  return params[static_cast<std::size_t>(i)];
}

double FitResult::error(std::string_view name) const {
  const int i = index(name);
  if (i < 0) throw ArgumentError("fit result has no parameter '" + std::string(name) + "'");
  return std_errors[static_cast<std::size_t>(i)];
}

bool FitResult::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

class Problem {
 public:
  Problem(const Model& model, std::span<const double> x, std::span<const double> y,
          std::span<const double> sigma)
      : model_(model), x_(x), y_(y), sigma_(sigma), n_(model.names.size()) {}

  std::size_t m() const { return x_.size(); }
  std::size_t n() const { return n_; }

  double lower(std::size_t j) const {
    return model_.lower.empty() ? -std::numeric_limits<double>::infinity() : model_.lower[j];
  }
  double upper(std::size_t j) const {
    return model_.upper.empty() ? std::numeric_limits<double>::infinity() : model_.upper[j];
  }

  void clamp(Eigen::VectorXd& p) const {
    for (std::size_t j = 0; j < n_; ++j) {
      p[static_cast<Eigen::Index>(j)] =
          std::clamp(p[static_cast<Eigen::Index>(j)], lower(j), upper(j));
    }
  }

  double weight(std::size_t i) const { return sigma_.empty() ? 1.0 : 1.0 / sigma_[i]; }

  /// r_i = (y_i − f_i)/σ_i
  Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(m()));
    const std::span<const double> ps(p.data(), n_);
    for (std::size_t i = 0; i < m(); ++i) {
      const double f = model_.f(ps, x_[i]);
      if (!std::isfinite(f)) throw ArgumentError("model '" + model_.id + "' is not finite");
      r[static_cast<Eigen::Index>(i)] = (y_[i] - f) * weight(i);
    }
    return r;
  }

  /// ‖y/σ‖₂, the scale against which a zero residual is judged.
  double data_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < m(); ++i) s += std::pow(y_[i] * weight(i), 2);
    return std::sqrt(s);
  }

  /// J_ij = ∂f_i/∂p_j / σ_i. Forward differences during the iterations;
  /// `central` for the final Jacobian behind the covariance.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p, const Eigen::VectorXd& r,
                           bool central = false) const {
    const auto m_ = static_cast<Eigen::Index>(m());
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd j(m_, n);
    const std::span<const double> ps(p.data(), n_);
    if (model_.jacobian) {
      std::vector<double> grad(n_);
      for (std::size_t i = 0; i < m(); ++i) {
        model_.jacobian(ps, x_[i], grad);
        for (Eigen::Index k = 0; k < n; ++k) {
          j(static_cast<Eigen::Index>(i), k) = grad[static_cast<std::size_t>(k)] * weight(i);
        }
      }
      return j;
    }
    if (central) {
      const double eps = std::cbrt(std::numeric_limits<double>::epsilon());
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const double h = eps * (p[k] != 0.0 ? std::abs(p[k]) : 1.0);
        if (p[k] - h < lower(ks) || p[k] + h > upper(ks)) {
          j.col(k) = jacobian(p, r).col(k);
          continue;
        }
        Eigen::VectorXd qp = p, qm = p;
        qp[k] += h;
        qm[k] -= h;
        j.col(k) = -(residual(qp) - residual(qm)) / (qp[k] - qm[k]);
      }
      return j;
    }
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::VectorXd q = p;
      double h = eps * (p[k] != 0.0 ? std::abs(p[k]) : 1.0);
      if (q[k] + h > upper(static_cast<std::size_t>(k))) h = -h;
      q[k] += h;
      h = q[k] - p[k];
      const Eigen::VectorXd rq = residual(q);
      // r = (y − f)/σ, so ∂f/∂p /σ = −∂r/∂p
      j.col(k) = -(rq - r) / h;
    }
    return j;
  }

  /// Projected gradient cosine measure.
  double gradient_cosine(const Eigen::VectorXd& p, const Eigen::MatrixXd& j,
                         const Eigen::VectorXd& r) const {
    const double rn = r.norm();
    // A residual at rounding level carries no direction.
    if (rn <= 1e-12 * data_norm()) return 0.0;
    const Eigen::VectorXd g = j.transpose() * r;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const auto ks = static_cast<std::size_t>(k);
      // g > 0 asks to increase p_k; blocked at the upper bound, and vice versa.
      if (g[k] > 0.0 && p[k] >= upper(ks)) continue;
      if (g[k] < 0.0 && p[k] <= lower(ks)) continue;
      const double cn = j.col(k).norm();
      if (cn == 0.0) continue;
      worst = std::max(worst, std::abs(g[k]) / (cn * rn));
    }
    return worst;
  }

 private:
  const Model& model_;
  std::span<const double> x_;
  std::span<const double> y_;
  std::span<const double> sigma_;
  std::size_t n_;
};

void require_full_rank(const Eigen::MatrixXd& j, double rcond, const std::string& id) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s[0] > 0.0) || s[s.size() - 1] < rcond * s[0]) {
    throw DegenerateFitError("degenerate fit: model '" + id +
                             "' has a singular Jacobian (parameters not identifiable)");
  }
}

}  // namespace

FitResult nlls_solve(const Model& model, std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma, std::span<const double> init,
                     const FitOptions& options) {
  const std::size_t n = model.names.size();
  if (!model.f) throw ArgumentError("model '" + model.id + "' has no function");
  if (n == 0) throw ArgumentError("model '" + model.id + "' has no parameters");
  if (init.size() != n) throw ArgumentError("initial guess has the wrong length");
  if (x.size() != y.size()) throw ArgumentError("x and y differ in length");
  if (!sigma.empty() && sigma.size() != y.size()) throw ArgumentError("sigma has the wrong length");
  if (x.size() < n) {
    throw ArgumentError("need at least " + std::to_string(n) + " data points, got " +
                        std::to_string(x.size()));
  }
  if ((!model.lower.empty() && model.lower.size() != n) ||
      (!model.upper.empty() && model.upper.size() != n)) {
    throw ArgumentError("bounds have the wrong length");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ArgumentError("data must be finite");
    if (!sigma.empty() && !(sigma[i] > 0.0 && std::isfinite(sigma[i]))) {
      throw ArgumentError("sigma must be positive");
    }
  }

  Problem prob(model, x, y, sigma);
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(n));
  prob.clamp(p);
  Eigen::VectorXd r = prob.residual(p);
  double cost = r.squaredNorm();
  Eigen::MatrixXd j = prob.jacobian(p, r);
  require_full_rank(j, options.rcond, model.id);

  FitResult out;
  double lambda = options.lambda0;
  bool stopped = false;
  int iter = 0;
  for (; iter < options.max_iter && !stopped; ++iter) {
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < options.gtol) {
      stopped = true;
      break;
    }
    const Eigen::MatrixXd a = j.transpose() * j;
    Eigen::VectorXd d = a.diagonal();
    const double dmax = std::max(d.maxCoeff(), std::numeric_limits<double>::min());
    for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = std::max(d[k], 1e-12 * dmax);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * d;
      const Eigen::VectorXd step = damped.ldlt().solve(g);
      Eigen::VectorXd trial = p + step;
      prob.clamp(trial);
      const Eigen::VectorXd r_trial = prob.residual(trial);
      const double cost_trial = r_trial.squaredNorm();
      if (cost_trial <= cost && std::isfinite(cost_trial)) {
        // Sensitivity-scaled step test: ‖D δ‖ ≤ xtol ‖D p‖ with D² = diag(JᵀJ).
        const Eigen::VectorXd dscale = d.cwiseSqrt();
        const double change = dscale.cwiseProduct(trial - p).norm();
        const bool small = change <= options.xtol * (dscale.cwiseProduct(p).norm() + options.xtol);
        p = trial;
        r = r_trial;
        cost = cost_trial;
        j = prob.jacobian(p, r);
        lambda = std::max(lambda / options.lambda_down, 1e-15);
        accepted = true;
        if (small) stopped = true;
      } else {
        lambda *= options.lambda_up;
        if (lambda > 1e16) {
          // No descent possible along the damped direction.
          stopped = true;
          break;
        }
      }
    }
  }

  // Undamped Gauss–Newton polish; exact for models linear in the parameters.
  // Ties at rounding level are accepted.
  j = prob.jacobian(p, r, true);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::VectorXd trial = p + (j.transpose() * j).ldlt().solve(g);
    prob.clamp(trial);
    if (!trial.allFinite() || trial == p) break;
    const Eigen::VectorXd r_trial = prob.residual(trial);
    const double cost_trial = r_trial.squaredNorm();
    if (!(cost_trial <= cost * (1.0 + 1e-12))) break;
    p = trial;
    r = r_trial;
    cost = cost_trial;
    j = prob.jacobian(p, r, true);
  }

  require_full_rank(j, options.rcond, model.id);
  const Eigen::MatrixXd a = j.transpose() * j;
  Eigen::MatrixXd cov = a.inverse();
  const int dof = static_cast<int>(x.size()) - static_cast<int>(n);
  if (sigma.empty() && dof > 0) cov *= cost / dof;
  cov = 0.5 * (cov + cov.transpose());

  out.model = model.id;
  out.names = model.names;
  out.params.assign(p.data(), p.data() + p.size());
  out.covariance = cov;
  out.std_errors.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.std_errors[k] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(k),
                                                    static_cast<Eigen::Index>(k))));
  }
  out.residual_norm = std::sqrt(cost);
  out.gradient_norm = prob.gradient_cosine(p, j, r);
  out.n_iter = iter;
  out.dof = dof;
  out.converged = stopped && out.gradient_norm <= options.converged_gradient;
  if (!stopped) {
    out.message = "iteration cap of " + std::to_string(options.max_iter) + " reached";
  } else if (!out.converged) {
    out.message = "stopped with gradient cosine " + std::to_string(out.gradient_norm);
  }
  return out;
}

}  // namespace donorspin
