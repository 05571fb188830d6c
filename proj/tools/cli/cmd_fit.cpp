#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "app.hpp"
#include "commands.hpp"
#include "donorspin/csv.hpp"
#include "donorspin/errors.hpp"

namespace donorspin::cli {

namespace {

std::map<std::string, double> parse_init(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--init expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) throw ArgumentError("--init " + key + ": not a number: '" + value + "'");
    out[key] = v;
  }
  return out;
}

std::vector<double> column(const csv::Table& table, int index, const std::string& name) {
  std::vector<double> v;
  v.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string& cell = row[static_cast<std::size_t>(index)];
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) {
      throw ArgumentError("column " + name + ": not a number: '" + cell + "'");
    }
    v.push_back(d);
  }
  return v;
}

int find_column(const csv::Table& table, const std::string& name) {
  const int i = table.column(name);
  if (i < 0) throw ArgumentError("input has no column '" + name + "'");
  return i;
}

/// Restarts a fitted model from user-supplied values of its parameters.
FitResult refit(const FitResult& fit, const Model& model, const std::map<std::string, double>& init,
                std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  std::vector<double> start = fit.params;
  for (const auto& [key, value] : init) {
    const int i = fit.index(key);
    if (i < 0) {
      std::string names;
      for (const auto& n : fit.names) names += (names.empty() ? "" : ", ") + n;
      throw ArgumentError("--init: model '" + fit.model + "' has no parameter '" + key +
                          "' (parameters: " + names + ")");
    }
    start[static_cast<std::size_t>(i)] = value;
  }
  return nlls_solve(model, x, y, sigma, start);
}

}  // namespace

int run_fit(const Context& ctx, const FitArgs& args) {
  const std::string text = read_file(args.input);
  std::istringstream in(text);
  const csv::Table table = csv::read(in);
  if (table.header.size() < 2) throw ArgumentError("input needs at least two columns");

  const int xi = args.x_column.empty() ? 0 : find_column(table, args.x_column);
  int yi = 1;
  if (!args.y_column.empty()) {
    yi = find_column(table, args.y_column);
  } else if (table.column("sampled_counts") >= 0) {
    yi = table.column("sampled_counts");
  }
  int si = -1;
  if (!args.unweighted) {
    if (!args.sigma_column.empty()) {
      si = find_column(table, args.sigma_column);
    } else if (table.header[static_cast<std::size_t>(yi)] == "sampled_counts") {
      si = table.column("err_counts");
    }
  }
  const auto x = column(table, xi, table.header[static_cast<std::size_t>(xi)]);
  const auto y = column(table, yi, table.header[static_cast<std::size_t>(yi)]);
  std::vector<double> sigma;
  if (si >= 0) {
    sigma = column(table, si, table.header[static_cast<std::size_t>(si)]);
    // Poisson errors of empty bins are floored at one count.
    if (table.header[static_cast<std::size_t>(si)] == "err_counts") {
      for (double& s : sigma) s = std::max(s, 1.0);
    }
  }
  auto init = parse_init(args.init);

  FitResult fit;
  if (args.model == "exp") {
    fit = fit_exponential_recovery(x, y, sigma);
    if (!init.empty()) fit = refit(fit, fit_model("exp", x), init, x, y, sigma);
  } else if (args.model == "dexp") {
    fit = fit_double_exponential(x, y, sigma);
    if (!init.empty()) fit = refit(fit, fit_model("dexp", x), init, x, y, sigma);
  } else if (args.model == "powerlaw") {
    std::optional<double> fixed_n;
    if (auto it = init.find("n"); it != init.end()) {
      fixed_n = it->second;
      init.erase(it);
    }
    if (!init.empty()) throw ArgumentError("--init: powerlaw accepts only n=<value> (fixes the exponent)");
    fit = fit_power_law(x, y, fixed_n, sigma);
  } else if (args.model == "temp") {
    if (!args.field) throw ArgumentError("--model temp needs --field");
    const double g = args.g ? *args.g : ctx.material().material.g_e;
    fit = fit_temperature_model(x, y, *args.field, g, sigma);
    if (!init.empty()) fit = refit(fit, fit_model("temp", x, *args.field, g), init, x, y, sigma);
  } else if (args.model == "zeeman") {
    fit = fit_zeeman_linear(x, y, sigma);
    if (!init.empty()) fit = refit(fit, fit_model("zeeman", x), init, x, y, sigma);
  } else {
    LineFitOptions options;
    std::map<int, double> centers;
    for (const auto& [key, value] : init) {
      if (key == "fwhm") {
        options.init_fwhm = value;
      } else if (key.rfind("center_", 0) == 0) {
        centers[std::stoi(key.substr(7))] = value;
      } else {
        throw ArgumentError("--init: lines accepts center_<i>=<eV> and fwhm=<eV>");
      }
    }
    if (!centers.empty()) {
      if (centers.size() != static_cast<std::size_t>(args.lines) || centers.begin()->first != 0 ||
          centers.rbegin()->first != args.lines - 1) {
        throw ArgumentError("--init: give center_0 .. center_" + std::to_string(args.lines - 1));
      }
      for (const auto& [i, c] : centers) options.init_centers.push_back(c);
    }
    fit = fit_spectral_lines(x, y, args.lines, options, sigma);
  }

  nlohmann::ordered_json doc = fit_to_json(fit);
  doc["input"] = args.input;
  doc["n_points"] = x.size();
  doc["weighted"] = !sigma.empty();
  const std::string rendered = doc.dump(2) + "\n";
  ctx.out << rendered;
  if (ctx.globals.out) {
    auto outputs = ctx.outputs(text);
    outputs.write("fit_" + args.model + ".json", [&](std::ostream& o) { o << rendered; });
    outputs.finish();
  }
  if (!fit.converged) {
    ctx.err << "fit did not converge: " << fit.message << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace donorspin::cli
