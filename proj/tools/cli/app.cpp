#include "app.hpp"

#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "donorspin/errors.hpp"

#ifndef DONORSPIN_VERSION
#define DONORSPIN_VERSION "0.0.0"
#endif

namespace donorspin::cli {

MaterialConfig Context::material() const {
  if (globals.config.empty()) return MaterialConfig{};
  MaterialConfig mc = load_material_config(read_file(globals.config));
  for (const auto& w : mc.warnings) err << "warning: " << globals.config << ": " << w << '\n';
  return mc;
}

RunManifest Context::manifest(const std::string& extra) const {
  RunManifest m;
  const std::string config_bytes = globals.config.empty() ? std::string() : read_file(globals.config);
  m.config_digest = "fnv1a64:" + hex64(fnv1a(extra, fnv1a(config_bytes)));
  m.command_line = command_line;
  m.seed = globals.seed;
  m.tool_version = DONORSPIN_VERSION;
  m.run_id = hex64(fnv1a(command_line + '\n' + m.config_digest + '\n' + std::to_string(m.seed)));
  m.started_utc = utc_now();
  return m;
}

OutputSet Context::outputs(const std::string& extra) const {
  return OutputSet(globals.out.value_or("."), manifest(extra));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"donorspin: donor spin relaxation theory, simulation and fitting"};
  app.name("donorspin");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Material configuration document (JSON)");
  app.add_option("--seed", g.seed, "Random seed (64-bit unsigned)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--tolerance", g.tolerance, "Validation tolerance")->check(CLI::PositiveNumber);

  TheoryArgs theory;
  auto* c_theory = app.add_subcommand("theory", "T1 versus field from the closed-form rate");
  c_theory->add_option("--geometry", theory.geometry, "faraday | voigt")->required();
  c_theory->add_option("--b", theory.fields, "Field grid in T: start:stop:step, a,b,c or one value")
      ->capture_default_str();
  c_theory->add_option("--temp", theory.temperature, "Temperature in K")->capture_default_str();

  OracleArgs oracle;
  auto* c_oracle = app.add_subcommand("oracle", "Compare the quadrature golden-rule rate with the closed form");
  c_oracle->add_option("--geometry", oracle.geometry, "faraday | voigt | both")->capture_default_str();
  c_oracle->add_option("--b", oracle.fields, "Field grid in T")->capture_default_str();
  c_oracle->add_option("--quad-order", oracle.quad_order, "Gauss-Legendre order of the sphere rule")
      ->capture_default_str();
  c_oracle->add_option("--piezo-sum", oracle.piezo_sum, "per-constant | coherent")
      ->check(CLI::IsMember({"per-constant", "coherent"}))
      ->capture_default_str();

  SimulateArgs simulate;
  auto* c_sim = app.add_subcommand("simulate", "Run a rate-equation protocol document");
  c_sim->add_option("protocol,--protocol", simulate.protocol, "Protocol document (JSON)")->required();
  c_sim->add_option("--solver", simulate.solver, "exact-linear | fixed-step");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a model to a CSV table and print the result document");
  c_fit->add_option("--model", fit.model, "exp | dexp | powerlaw | temp | zeeman | lines")
      ->required()
      ->check(CLI::IsMember({"exp", "dexp", "powerlaw", "temp", "zeeman", "lines"}));
  c_fit->add_option("--in", fit.input, "Input CSV with a header row")->required();
  c_fit->add_option("--init", fit.init, "Initial values or model settings, key=value");
  c_fit->add_option("--x", fit.x_column, "x column (default: first)");
  c_fit->add_option("--y", fit.y_column, "y column (default: sampled_counts or the second)");
  c_fit->add_option("--sigma", fit.sigma_column, "error column (default: err_counts with sampled_counts)");
  c_fit->add_flag("--unweighted", fit.unweighted, "Ignore error columns");
  c_fit->add_option("--field", fit.field, "Field in T for the temperature model");
  c_fit->add_option("--g", fit.g, "g-factor for the temperature model (default: material g_e)");
  c_fit->add_option("--lines", fit.lines, "Number of lines for the lines model")->check(CLI::PositiveNumber);

  ReproduceArgs reproduce;
  auto* c_rep = app.add_subcommand("reproduce", "Regenerate a bundled figure data set");
  c_rep->add_option("target", reproduce.target, "fig3 | fig5 | fig9")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig5", "fig9"}));
  c_rep->add_option("--noise", reproduce.noise, "Relative Gaussian noise on fig5 data (seeded)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  std::ostringstream cmd;
  for (int i = 1; i < argc; ++i) cmd << (i > 1 ? " " : "") << argv[i];
  const Context ctx{g, cmd.str(), out, err};

  try {
    if (*c_theory) return run_theory(ctx, theory);
    if (*c_oracle) return run_oracle(ctx, oracle);
    if (*c_sim) return run_simulate(ctx, simulate);
    if (*c_fit) return run_fit(ctx, fit);
    if (*c_rep) return run_reproduce(ctx, reproduce);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DegenerateFitError& e) {
    err << "fit failed: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "invalid parameter " << e.field() << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace donorspin::cli
