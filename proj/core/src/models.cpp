#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "donorspin/constants.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/fitting.hpp"
#include "donorspin/lineshape.hpp"

namespace donorspin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_points(std::span<const double> x, std::span<const double> y, std::size_t n,
                    const char* what) {
  if (x.size() != y.size()) throw ArgumentError(std::string(what) + ": x and y differ in length");
  if (x.size() < n) {
    throw ArgumentError(std::string(what) + " needs at least " + std::to_string(n) + " points");
  }
}

std::vector<std::size_t> order_by(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  return idx;
}

/// Time where (y − y_start)/(y_end − y_start) first reaches 1 − 1/e, linearly
/// interpolated; used to seed exponential time constants.
double crossing_time(std::span<const double> t, std::span<const double> y, double y_start,
                     double y_end) {
  const auto idx = order_by(t);
  const double span = y_end - y_start;
  const double target = 1.0 - std::exp(-1.0);
  double prev_t = t[idx.front()];
  double prev_f = 0.0;
  for (auto i : idx) {
    const double f = span != 0.0 ? (y[i] - y_start) / span : 0.0;
    if (f >= target) {
      if (f == prev_f) return t[i] - t[idx.front()];
      const double u = (target - prev_f) / (f - prev_f);
      return std::max(prev_t + u * (t[i] - prev_t) - t[idx.front()], 0.0);
    }
    prev_t = t[i];
    prev_f = f;
  }
  return 0.0;
}

double seed_time(double crossing, std::span<const double> t) {
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  const double span = *hi - *lo;
  if (crossing > 0.0) return crossing;
  return span > 0.0 ? span / 3.0 : 1.0;
}

Model recovery_model(double t_floor) {
  Model m;
  m.id = "exp";
  m.names = {"T1", "A", "C"};
  m.f = [](std::span<const double> p, double tau) {
    return p[1] * (1.0 - std::exp(-tau / p[0])) + p[2];
  };
  m.jacobian = [](std::span<const double> p, double tau, std::span<double> g) {
    const double e = std::exp(-tau / p[0]);
    g[0] = -p[1] * e * tau / (p[0] * p[0]);
    g[1] = 1.0 - e;
    g[2] = 1.0;
  };
  m.lower = {t_floor, -kInf, -kInf};
  m.upper = {kInf, kInf, kInf};
  return m;
}

Model decay_model(double t_floor) {
  Model m;
  m.id = "decay";
  m.names = {"tau", "A", "C"};
  m.f = [](std::span<const double> p, double t) { return p[1] * std::exp(-t / p[0]) + p[2]; };
  m.jacobian = [](std::span<const double> p, double t, std::span<double> g) {
    const double e = std::exp(-t / p[0]);
    g[0] = p[1] * e * t / (p[0] * p[0]);
    g[1] = e;
    g[2] = 1.0;
  };
  m.lower = {t_floor, -kInf, -kInf};
  m.upper = {kInf, kInf, kInf};
  return m;
}

Model double_decay_model(double t_floor) {
  Model m;
  m.id = "dexp";
  m.names = {"t_fast", "t_slow", "A_f", "A_s", "C"};
  m.f = [](std::span<const double> p, double t) {
    return p[2] * std::exp(-t / p[0]) + p[3] * std::exp(-t / p[1]) + p[4];
  };
  m.jacobian = [](std::span<const double> p, double t, std::span<double> g) {
    const double ef = std::exp(-t / p[0]);
    const double es = std::exp(-t / p[1]);
    g[0] = p[2] * ef * t / (p[0] * p[0]);
    g[1] = p[3] * es * t / (p[1] * p[1]);
    g[2] = ef;
    g[3] = es;
    g[4] = 1.0;
  };
  m.lower = {t_floor, t_floor, 0.0, 0.0, -kInf};
  m.upper = {kInf, kInf, kInf, kInf, kInf};
  return m;
}

double time_floor(std::span<const double> t) {
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  return std::max(1e-12 * (*hi - *lo), std::numeric_limits<double>::min());
}

/// 2 N_ph + 1 at phonon energy `delta` (eV).
auto thermal_factor_at(double delta) {
  return [delta](double temp) { return 1.0 / std::tanh(0.5 * delta / (PC::k_B * temp)); };
}

Model temperature_model(double field_T, double g) {
  const auto thermal_factor = thermal_factor_at(std::abs(g * PC::mu_B * field_T));
  Model m;
  m.id = "temp";
  m.names = {"gamma_down_up", "gamma0"};
  m.f = [thermal_factor](std::span<const double> p, double temp) {
    return 1.0 / (p[0] * thermal_factor(temp) + p[1]);
  };
  m.jacobian = [thermal_factor](std::span<const double> p, double temp, std::span<double> gr) {
    const double f = thermal_factor(temp);
    const double den = p[0] * f + p[1];
    gr[0] = -f / (den * den);
    gr[1] = -1.0 / (den * den);
  };
  return m;
}

Model zeeman_model() {
  Model m;
  m.id = "zeeman";
  m.names = {"g_eff"};
  m.f = [](std::span<const double> p, double b) { return p[0] * PC::mu_B * b; };
  m.jacobian = [](std::span<const double>, double b, std::span<double> g) { g[0] = PC::mu_B * b; };
  return m;
}

/// Reorders parameter blocks of a fit result (covariance included).
void permute(FitResult& r, const std::vector<std::size_t>& perm) {
  const auto n = perm.size();
  std::vector<double> params(n), errors(n);
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    params[a] = r.params[perm[a]];
    errors[a] = r.std_errors[perm[a]];
    for (std::size_t b = 0; b < n; ++b) {
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          r.covariance(static_cast<Eigen::Index>(perm[a]), static_cast<Eigen::Index>(perm[b]));
    }
  }
  r.params = std::move(params);
  r.std_errors = std::move(errors);
  r.covariance = std::move(cov);
}

}  // namespace

Model fit_model(std::string_view id, std::span<const double> x, double field_T, double g) {
  if (id == "exp") return recovery_model(time_floor(x));
  if (id == "decay") return decay_model(time_floor(x));
  if (id == "dexp") return double_decay_model(time_floor(x));
  if (id == "temp") {
    if (!(std::abs(g * field_T) > 0.0)) throw ArgumentError("temperature model needs a nonzero Zeeman energy");
    return temperature_model(field_T, g);
  }
  if (id == "zeeman") return zeeman_model();
  throw ArgumentError("no standalone model '" + std::string(id) + "'");
}

FitResult fit_exponential_recovery(std::span<const double> tau, std::span<const double> y,
                                   std::span<const double> sigma) {
  require_points(tau, y, 4, "exponential recovery fit");
  const auto idx = order_by(tau);
  const double c0 = y[idx.front()];
  const double a0 = y[idx.back()] - c0;
  const double t0 = seed_time(crossing_time(tau, y, c0, y[idx.back()]), tau);
  const std::vector<double> init{t0, a0, c0};
  return nlls_solve(recovery_model(time_floor(tau)), tau, y, sigma, init);
}

FitResult fit_exponential_decay(std::span<const double> t, std::span<const double> y,
                                std::span<const double> sigma) {
  require_points(t, y, 4, "exponential decay fit");
  const auto idx = order_by(t);
  const double c0 = y[idx.back()];
  const double a0 = y[idx.front()] - c0;
  const double t0 = seed_time(crossing_time(t, y, y[idx.front()], c0), t);
  // Fit with the time origin at the first sample, then move A back to t = 0.
  const double t_ref = t[idx.front()];
  std::vector<double> ts(t.begin(), t.end());
  for (double& v : ts) v -= t_ref;
  const std::vector<double> init{t0, a0, c0};
  FitResult r = nlls_solve(decay_model(time_floor(ts)), ts, y, sigma, init);
  if (t_ref == 0.0) return r;
  const double tau = r.params[0];
  const double scale = std::exp(t_ref / tau);
  if (!std::isfinite(r.params[1] * scale)) {
    throw ArgumentError("exponential decay fit: amplitude at t = 0 overflows");
  }
  // A = A' e^{t_ref/τ}
  Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
  jac(1, 0) = -r.params[1] * scale * t_ref / (tau * tau);
  jac(1, 1) = scale;
  r.params[1] *= scale;
  r.covariance = jac * r.covariance * jac.transpose();
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose());
  for (int k = 0; k < 3; ++k) r.std_errors[k] = std::sqrt(std::max(0.0, r.covariance(k, k)));
  return r;
}

FitResult fit_double_exponential(std::span<const double> t, std::span<const double> y,
                                 std::span<const double> sigma) {
  require_points(t, y, 6, "double exponential fit");
  const FitResult single = fit_exponential_decay(t, y, sigma);

  auto fallback = [&](const std::string& why) {
    FitResult r;
    r.model = "dexp";
    r.names = {"t_fast", "t_slow", "A_f", "A_s", "C"};
    const double tau = single.value("tau");
    r.params = {tau, tau, 0.0, single.value("A"), single.value("C")};
    r.std_errors = {single.error("tau"), single.error("tau"), 0.0, single.error("A"),
                    single.error("C")};
    // t_fast and t_slow both map onto the single time constant; A_f is fixed at 0.
    const int from[5] = {0, 0, -1, 1, 2};
    r.covariance = Eigen::MatrixXd::Zero(5, 5);
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        if (from[a] >= 0 && from[b] >= 0) r.covariance(a, b) = single.covariance(from[a], from[b]);
      }
    }
    r.residual_norm = single.residual_norm;
    r.gradient_norm = single.gradient_norm;
    r.converged = single.converged;
    r.n_iter = single.n_iter;
    r.dof = static_cast<int>(t.size()) - 3;
    r.flags = {"single_exponential_fallback"};
    r.message = why;
    return r;
  };

  // Peeling seed: slow component from the last two thirds, fast one from the
  // early residual.
  const auto idx = order_by(t);
  const double t_begin = t[idx.front()];
  const double t_end = t[idx.back()];
  const double t_cut = t_begin + (t_end - t_begin) / 3.0;
  std::vector<double> tt, yt, st;
  for (auto i : idx) {
    if (t[i] >= t_cut) {
      tt.push_back(t[i] - t_cut);
      yt.push_back(y[i]);
      if (!sigma.empty()) st.push_back(sigma[i]);
    }
  }
  double ts0 = single.value("tau");
  double as0 = std::max(single.value("A"), 0.0);
  double c0 = single.value("C");
  if (tt.size() >= 4) {
    try {
      // Tail times start at t_cut; move the amplitude back to t = 0.
      const auto tail = fit_exponential_decay(tt, yt, st);
      const double amp = tail.value("A") * std::exp(t_cut / tail.value("tau"));
      if (tail.value("tau") > 0.0 && amp > 0.0 && std::isfinite(amp)) {
        ts0 = tail.value("tau");
        as0 = amp;
        c0 = tail.value("C");
      }
    } catch (const Error&) {
      // No usable tail; keep the single-exponential seed.
    }
  }
  double tf0 = ts0 / 10.0;
  double af0 = 0.0;
  {
    // Log-linear fit of the leading run of the early residual that stays
    // above 5% of its largest value.
    auto early = [&](std::size_t i) { return y[i] - (as0 * std::exp(-t[i] / ts0) + c0); };
    double top = 0.0;
    for (auto i : idx) {
      if (t[i] >= t_cut) break;
      top = std::max(top, early(i));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    bool started = false;
    for (auto i : idx) {
      if (t[i] >= t_cut) break;
      const double resid = early(i);
      if (resid <= 0.05 * top) {
        if (started) break;
        continue;
      }
      started = true;
      const double ly = std::log(resid);
      sx += t[i];
      sy += ly;
      sxx += t[i] * t[i];
      sxy += t[i] * ly;
      ++cnt;
    }
    const double den = cnt * sxx - sx * sx;
    if (cnt >= 2 && den > 0.0) {
      const double slope = (cnt * sxy - sx * sy) / den;
      const double icpt = (sy - slope * sx) / cnt;
      if (slope < 0.0 && -1.0 / slope < ts0) {
        tf0 = -1.0 / slope;
        af0 = std::exp(icpt);
      }
    }
    if (af0 <= 0.0) af0 = std::max(std::abs(y[idx.front()] - (as0 * std::exp(-t_begin / ts0) + c0)), 1e-3 * as0);
  }

  FitResult r;
  try {
    const std::vector<double> init{tf0, ts0, af0, as0, c0};
    r = nlls_solve(double_decay_model(time_floor(t)), t, y, sigma, init);
  } catch (const DegenerateFitError&) {
    return fallback("two-term fit is degenerate");
  }
  if (r.params[0] > r.params[1]) permute(r, {1, 0, 3, 2, 4});
  const double tf = r.params[0];
  const double ts = r.params[1];
  const double amp_total = r.params[2] + r.params[3];
  if (std::abs(ts - tf) <= 0.01 * ts) return fallback("time constants coincide within 1%");
  if (amp_total <= 0.0 || std::min(r.params[2], r.params[3]) <= 1e-6 * amp_total) {
    return fallback("one amplitude collapsed to its bound");
  }
  return r;
}

FitResult fit_power_law(std::span<const double> field_T, std::span<const double> t1,
                        std::optional<double> fixed_n, std::span<const double> sigma) {
  if (field_T.size() != t1.size()) throw ArgumentError("power-law fit: B and T1 differ in length");
  const std::size_t need = fixed_n ? 1 : 2;
  if (field_T.size() < need) {
    throw ArgumentError("power-law fit needs at least " + std::to_string(need) + " points");
  }
  std::vector<double> u, v, s;
  for (std::size_t i = 0; i < field_T.size(); ++i) {
    if (!(field_T[i] > 0.0) || !(t1[i] > 0.0)) throw ArgumentError("power-law fit needs B > 0 and T1 > 0");
    u.push_back(std::log(field_T[i]));
    v.push_back(std::log(t1[i]));
    if (!sigma.empty()) s.push_back(sigma[i] / t1[i]);
  }
  FitResult r;
  if (fixed_n) {
    const double n = *fixed_n;
    Model m;
    m.id = "powerlaw";
    m.names = {"ln_a"};
    m.f = [n](std::span<const double> p, double x) { return p[0] - n * x; };
    m.jacobian = [](std::span<const double>, double, std::span<double> g) { g[0] = 1.0; };
    const std::vector<double> init{v[0] + n * u[0]};
    const auto lin = nlls_solve(m, u, v, s, init);
    r = lin;
    const double a = std::exp(lin.params[0]);
    r.names = {"a", "n"};
    r.params = {a, n};
    r.std_errors = {a * lin.std_errors[0], 0.0};
    r.covariance = Eigen::MatrixXd::Zero(2, 2);
    r.covariance(0, 0) = a * a * lin.covariance(0, 0);
    r.flags.push_back("fixed_n");
    return r;
  }
  Model m;
  m.id = "powerlaw";
  m.names = {"ln_a", "n"};
  m.f = [](std::span<const double> p, double x) { return p[0] - p[1] * x; };
  m.jacobian = [](std::span<const double>, double x, std::span<double> g) {
    g[0] = 1.0;
    g[1] = -x;
  };
  const std::vector<double> init{0.0, 0.0};
  const auto lin = nlls_solve(m, u, v, s, init);
  r = lin;
  const double a = std::exp(lin.params[0]);
  r.names = {"a", "n"};
  r.params = {a, lin.params[1]};
  Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
  d(0, 0) = a;
  r.covariance = d * lin.covariance * d;
  r.std_errors = {std::sqrt(r.covariance(0, 0)), std::sqrt(r.covariance(1, 1))};
  return r;
}

FitResult fit_temperature_model(std::span<const double> temperature_K,
                                std::span<const double> t1, double field_T, double g,
                                std::span<const double> sigma) {
  require_points(temperature_K, t1, 2, "temperature-model fit");
  const double delta = std::abs(g * PC::mu_B * field_T);
  if (!(delta > 0.0)) throw ArgumentError("temperature-model fit needs a nonzero Zeeman energy");
  const auto thermal_factor = thermal_factor_at(delta);
  for (std::size_t i = 0; i < temperature_K.size(); ++i) {
    if (!(temperature_K[i] > 0.0)) throw ArgumentError("temperatures must be positive");
    if (!(t1[i] > 0.0)) throw ArgumentError("T1 values must be positive");
  }

  // Linear seed: 1/T1 = Γ F + Γ₀, weighted by the propagated errors.
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < t1.size(); ++i) {
    const double f = thermal_factor(temperature_K[i]);
    const double w = sigma.empty() ? 1.0 : std::pow(t1[i] * t1[i] / sigma[i], 2);
    const Eigen::Vector2d row(f, 1.0);
    a += w * row * row.transpose();
    b += w * row / t1[i];
  }
  Eigen::Vector2d seed = a.fullPivLu().solve(b);
  if (!seed.allFinite()) seed = Eigen::Vector2d(1.0 / t1[0], 0.0);

  const std::vector<double> init{seed[0], seed[1]};
  return nlls_solve(temperature_model(field_T, g), temperature_K, t1, sigma, init);
}

FitResult fit_zeeman_linear(std::span<const double> field_T, std::span<const double> splitting_eV,
                            std::span<const double> sigma) {
  require_points(field_T, splitting_eV, 2, "Zeeman fit");
  if (std::all_of(field_T.begin(), field_T.end(), [](double b) { return b == 0.0; })) {
    throw ArgumentError("Zeeman fit needs at least one nonzero field");
  }
  const std::vector<double> init{1.0};
  return nlls_solve(zeeman_model(), field_T, splitting_eV, sigma, init);
}

FitResult fit_spectral_lines(std::span<const double> energy, std::span<const double> intensity,
                             int n_lines, const LineFitOptions& options,
                             std::span<const double> sigma) {
  if (n_lines < 1) throw ArgumentError("need at least one line");
  require_points(energy, intensity, static_cast<std::size_t>(4 * n_lines + 1), "line fit");
  if (!options.init_centers.empty() &&
      options.init_centers.size() != static_cast<std::size_t>(n_lines)) {
    throw ArgumentError("one initial center per line is required");
  }
  const double y_max = *std::max_element(intensity.begin(), intensity.end());
  const double y_min = *std::min_element(intensity.begin(), intensity.end());
  if (!(y_max > 0.0) || y_max == y_min) {
    throw DegenerateFitError("degenerate fit: spectrum has no line amplitude");
  }

  // Work in μeV about the grid mean and in units of the peak intensity.
  constexpr double kScale = 1e-6;
  const double e_ref = std::accumulate(energy.begin(), energy.end(), 0.0) / energy.size();
  std::vector<double> xs(energy.size()), ys(energy.size()), ss;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    xs[i] = (energy[i] - e_ref) / kScale;
    ys[i] = intensity[i] / y_max;
    if (!sigma.empty()) ss.push_back(sigma[i] / y_max);
  }

  const auto idx = order_by(xs);
  const std::size_t peak = static_cast<std::size_t>(
      std::max_element(ys.begin(), ys.end()) - ys.begin());
  double fwhm0 = options.init_fwhm / kScale;
  if (!(fwhm0 > 0.0)) {
    const double half = 0.5 * (ys[peak] + y_min / y_max);
    double lo = xs[peak], hi = xs[peak];
    for (auto i : idx) {
      if (ys[i] >= half) {
        lo = std::min(lo, xs[i]);
        hi = std::max(hi, xs[i]);
      }
    }
    fwhm0 = std::max(hi - lo, 2.0 * (xs[idx[1]] - xs[idx[0]]));
    if (n_lines > 1) fwhm0 /= n_lines;
  }
  std::vector<double> centers;
  if (options.init_centers.empty()) {
    // Highest local maxima.
    std::vector<std::size_t> maxima;
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      if (ys[idx[k]] >= ys[idx[k - 1]] && ys[idx[k]] > ys[idx[k + 1]]) maxima.push_back(idx[k]);
    }
    std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return ys[a] > ys[b]; });
    for (int l = 0; l < n_lines; ++l) {
      centers.push_back(static_cast<std::size_t>(l) < maxima.size() ? xs[maxima[l]] : xs[peak]);
    }
  } else {
    for (double c : options.init_centers) centers.push_back((c - e_ref) / kScale);
  }

  const double bg0 = y_min / y_max;
  std::vector<double> init;
  for (int l = 0; l < n_lines; ++l) {
    const auto near = std::min_element(idx.begin(), idx.end(), [&](auto a, auto b) {
      return std::abs(xs[a] - centers[l]) < std::abs(xs[b] - centers[l]);
    });
    init.insert(init.end(), {centers[static_cast<std::size_t>(l)], fwhm0,
                             std::max(ys[*near] - bg0, 1e-3), 0.5});
  }
  init.push_back(bg0);

  Model m;
  m.id = "lines";
  for (int l = 0; l < n_lines; ++l) {
    const auto s = std::to_string(l);
    m.names.insert(m.names.end(), {"center_" + s, "fwhm_" + s, "amplitude_" + s, "eta_" + s});
    m.lower.insert(m.lower.end(), {-kInf, 1e-3, 0.0, 0.0});
    m.upper.insert(m.upper.end(), {kInf, kInf, kInf, 1.0});
  }
  m.names.push_back("background");
  m.lower.push_back(-kInf);
  m.upper.push_back(kInf);
  m.f = [n_lines](std::span<const double> p, double x) {
    double s = p[static_cast<std::size_t>(4 * n_lines)];
    for (int l = 0; l < n_lines; ++l) {
      const auto o = static_cast<std::size_t>(4 * l);
      s += p[o + 2] * lineshape::pseudo_voigt_peak(x - p[o], p[o + 1], p[o + 3]);
    }
    return s;
  };

  m.jacobian = [n_lines](std::span<const double> p, double x, std::span<double> g) {
    for (int l = 0; l < n_lines; ++l) {
      const auto o = static_cast<std::size_t>(4 * l);
      const double a = p[o + 2];
      const double w = p[o + 1];
      const double eta = p[o + 3];
      const double u = 2.0 * (x - p[o]) / w;
      const double gs = std::exp(-std::numbers::ln2 * u * u);
      const double ls = 1.0 / (1.0 + u * u);
      const double dshape = eta * (-2.0 * u * ls * ls) + (1.0 - eta) * (-2.0 * std::numbers::ln2 * u * gs);
      g[o] = a * dshape * (-2.0 / w);
      g[o + 1] = a * dshape * (-u / w);
      g[o + 2] = eta * ls + (1.0 - eta) * gs;
      g[o + 3] = a * (ls - gs);
    }
    g[static_cast<std::size_t>(4 * n_lines)] = 1.0;
  };

  FitResult r = nlls_solve(m, xs, ys, ss, init);

  // Sort lines by center, then restore physical units.
  std::vector<int> order(static_cast<std::size_t>(n_lines));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return r.params[static_cast<std::size_t>(4 * a)] < r.params[static_cast<std::size_t>(4 * b)];
  });
  std::vector<std::size_t> perm;
  for (int l : order) {
    for (int k = 0; k < 4; ++k) perm.push_back(static_cast<std::size_t>(4 * l + k));
  }
  perm.push_back(static_cast<std::size_t>(4 * n_lines));
  permute(r, perm);

  const auto n = r.params.size();
  Eigen::VectorXd scale(static_cast<Eigen::Index>(n));
  for (int l = 0; l < n_lines; ++l) {
    const auto o = static_cast<Eigen::Index>(4 * l);
    scale.segment<4>(o) << kScale, kScale, y_max, 1.0;
    r.params[static_cast<std::size_t>(o)] = e_ref + r.params[static_cast<std::size_t>(o)] * kScale;
    r.params[static_cast<std::size_t>(o) + 1] *= kScale;
    r.params[static_cast<std::size_t>(o) + 2] *= y_max;
  }
  scale[static_cast<Eigen::Index>(n) - 1] = y_max;
  r.params[n - 1] *= y_max;
  r.covariance = scale.asDiagonal() * r.covariance * scale.asDiagonal();
  for (std::size_t k = 0; k < n; ++k) r.std_errors[k] *= scale[static_cast<Eigen::Index>(k)];
  if (sigma.empty()) r.residual_norm *= y_max;

  for (int a = 0; a + 1 < n_lines; ++a) {
    const auto oa = static_cast<std::size_t>(4 * a);
    const auto ob = oa + 4;
    const double width = std::max(r.params[oa + 1], r.params[ob + 1]);
    if (r.params[ob] - r.params[oa] < 0.1 * width) {
      r.flags.push_back("overlap");
      break;
    }
  }
  return r;
}

}  // namespace donorspin
