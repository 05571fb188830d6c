#include <algorithm>
#include <cmath>
#include <ostream>

#include "app.hpp"
#include "commands.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/dynamics.hpp"
#include "donorspin/errors.hpp"
#include "donorspin/protocol_config.hpp"
#include "svg_plot.hpp"

namespace donorspin::cli {

nlohmann::ordered_json fit_to_json(const FitResult& fit) {
  nlohmann::ordered_json j;
  j["model"] = fit.model;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    params[fit.names[i]] = fit.params[i];
    errors[fit.names[i]] = fit.std_errors[i];
  }
  j["params"] = params;
  j["std_errors"] = errors;
  nlohmann::ordered_json cov = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["residual_norm"] = fit.residual_norm;
  j["gradient_norm"] = fit.gradient_norm;
  j["converged"] = fit.converged;
  j["n_iter"] = fit.n_iter;
  j["dof"] = fit.dof;
  j["flags"] = fit.flags;
  if (!fit.message.empty()) j["message"] = fit.message;
  return j;
}

namespace {

Plot counts_plot(const std::string& title, const std::string& x_label, std::vector<double> x,
                 std::vector<double> expected, const std::vector<std::int64_t>& sampled) {
  Plot plot;
  plot.title = title;
  plot.x_label = x_label;
  plot.y_label = "counts";
  Series s;
  s.label = "sampled";
  s.scatter = true;
  s.x = x;
  s.y.assign(sampled.begin(), sampled.end());
  Series e;
  e.label = "expected";
  e.x = std::move(x);
  e.y = std::move(expected);
  plot.series = {s, e};
  return plot;
}

int simulate_trace(const Context& ctx, const ProtocolConfig& cfg, const LevelSystem& system,
                   OutputSet& outputs) {
  auto trace = evolve(system, cfg.sequence, cfg.ensemble, cfg.solver, ctx.globals.seed);
  trace.protocol = cfg.text;
  const auto path = outputs.write("trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
  const auto plot = counts_plot("trace", "t (s)", trace.time, trace.expected, trace.sampled);
  outputs.write("trace.svg", [&](std::ostream& o) { write_svg(o, plot); });
  ctx.out << "simulate trace: " << trace.time.size() << " bins, "
          << csv::format_number(trace.total_expected()) << " expected / " << trace.total_sampled()
          << " sampled counts -> " << path.string() << '\n';
  return kExitOk;
}

int simulate_recovery(const Context& ctx, const ProtocolConfig& cfg, const LevelSystem& system,
                      OutputSet& outputs) {
  const auto curve = cfg.kind == ProtocolKind::T1
                         ? run_t1_protocol(system, cfg.recovery, cfg.ensemble, ctx.globals.seed)
                         : run_pump_probe(system, cfg.recovery, cfg.ensemble, ctx.globals.seed);
  const auto path =
      outputs.write("recovery.csv", [&](std::ostream& o) { write_recovery_csv(o, curve); });

  std::vector<double> y(curve.sampled.begin(), curve.sampled.end());
  std::vector<double> sigma;
  for (double e : curve.err) sigma.push_back(std::max(e, 1.0));
  const auto fit = fit_exponential_recovery(curve.tau, y, sigma);
  outputs.write("recovery_fit.json", [&](std::ostream& o) { o << fit_to_json(fit).dump(2) << '\n'; });

  Plot plot = counts_plot(std::string(to_string(cfg.kind)) + " recovery", "tau (s)", curve.tau,
                          curve.expected, curve.sampled);
  Series model;
  model.label = "fit";
  const double t_max = curve.tau.back();
  for (int i = 0; i <= 200; ++i) {
    const double t = t_max * i / 200.0;
    model.x.push_back(t);
    model.y.push_back(fit.value("A") * (1.0 - std::exp(-t / fit.value("T1"))) + fit.value("C"));
  }
  plot.series[1] = model;
  outputs.write("recovery.svg", [&](std::ostream& o) { write_svg(o, plot); });

  ctx.out << "simulate " << to_string(cfg.kind) << ": " << curve.tau.size() << " delays, T1 = "
          << csv::format_number(fit.value("T1")) << " +- " << csv::format_number(fit.error("T1"))
          << " s (system " << csv::format_number(1.0 / system.relaxation_rate()) << " s) -> "
          << path.string() << '\n';
  if (!fit.converged) {
    ctx.err << "warning: recovery fit did not converge: " << fit.message << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

int simulate_spectrum(const Context& ctx, const ProtocolConfig& cfg, const MaterialParameters& mat,
                      OutputSet& outputs) {
  const auto spectrum =
      donorspin::simulate_spectrum(cfg.ensemble, cfg.geometry, cfg.field_T, mat, cfg.spectrum);
  const auto path =
      outputs.write("spectrum.csv", [&](std::ostream& o) { write_spectrum_csv(o, spectrum); });
  Plot plot;
  plot.title = "PL spectrum, " + std::string(to_string(cfg.geometry)) + ", " +
               csv::format_number(cfg.field_T) + " T";
  plot.x_label = "E (eV)";
  plot.y_label = "intensity";
  plot.series.push_back({"PL", spectrum.energy, spectrum.intensity, false});
  outputs.write("spectrum.svg", [&](std::ostream& o) { write_svg(o, plot); });
  ctx.out << "simulate spectrum: " << spectrum.energy.size() << " points;";
  for (const auto& line : spectrum.lines) {
    ctx.out << ' ' << to_string(line.id) << '@' << csv::format_number(line.center);
  }
  ctx.out << " -> " << path.string() << '\n';
  return kExitOk;
}

int simulate_ple(const Context& ctx, const ProtocolConfig& cfg, const LevelSystem& system,
                 OutputSet& outputs) {
  if (cfg.scan_detuning.empty()) throw ArgumentError("ple protocol needs scan_detuning_eV");
  Drive reference;
  reference.line = cfg.geometry == Geometry::Voigt ? Line::HDown : Line::SigmaPlus;
  const double center = laser_energy(system, reference);
  std::vector<double> energies;
  for (double d : cfg.scan_detuning) energies.push_back(center + d);
  const auto curve = donorspin::simulate_ple(cfg.ensemble, system, energies, cfg.ple, ctx.globals.seed);
  const auto path = outputs.write("ple.csv", [&](std::ostream& o) { write_ple_csv(o, curve); });
  const auto plot = counts_plot("PLE", "laser energy (eV)", curve.energy, curve.expected, curve.sampled);
  outputs.write("ple.svg", [&](std::ostream& o) { write_svg(o, plot); });
  ctx.out << "simulate ple: " << curve.energy.size() << " scan points around "
          << csv::format_number(center) << " eV -> " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_simulate(const Context& ctx, const SimulateArgs& args) {
  const std::string text = read_file(args.protocol);
  ProtocolConfig cfg = parse_protocol(text);
  for (const auto& w : cfg.warnings) ctx.err << "warning: " << args.protocol << ": " << w << '\n';
  if (!args.solver.empty()) {
    cfg.solver.kind = parse_solver(args.solver);
    cfg.recovery.solver = cfg.solver;
  }
  const auto mc = ctx.material();
  const auto donor = derive_donor(mc.material, mc.donor);
  LevelSystem system = build_level_system(cfg.geometry, cfg.field_T, cfg.temperature_K, mc.material,
                                          donor, cfg.optics);
  if (cfg.initial) system.populations = *cfg.initial;

  auto outputs = ctx.outputs(text);
  outputs.set_protocol(text);
  int status = kExitOk;
  switch (cfg.kind) {
    case ProtocolKind::Trace: status = simulate_trace(ctx, cfg, system, outputs); break;
    case ProtocolKind::T1:
    case ProtocolKind::PumpProbe: status = simulate_recovery(ctx, cfg, system, outputs); break;
    case ProtocolKind::Spectrum: status = simulate_spectrum(ctx, cfg, mc.material, outputs); break;
    case ProtocolKind::Ple: status = simulate_ple(ctx, cfg, system, outputs); break;
  }
  outputs.finish();
  return status;
}

}  // namespace donorspin::cli
