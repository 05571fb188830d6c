#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "donorspin/fitting.hpp"
#include "donorspin/material.hpp"
#include "manifest.hpp"
#include "json.hpp"

namespace donorspin::cli {

struct Globals {
  std::string config;  // material document; defaults when empty
  std::uint64_t seed = 42;
  std::optional<std::string> out;
  std::optional<double> tolerance;
};

struct Context {
  Globals globals;
  std::string command_line;
  std::ostream& out;
  std::ostream& err;

  /// Material document from --config, warnings echoed to `err`.
  MaterialConfig material() const;
  /// A manifest for this run; `extra` (e.g. a protocol document) enters the
  /// config digest.
  RunManifest manifest(const std::string& extra = {}) const;
  /// Output set rooted at --out (default ".").
  OutputSet outputs(const std::string& extra = {}) const;
};

struct TheoryArgs {
  std::string geometry;
  std::string fields = "1:8:0.25";
  double temperature = 1.5;
};

struct OracleArgs {
  std::string geometry = "both";
  std::string fields = "1,3,5,7";
  int quad_order = 64;
  std::string piezo_sum = "per-constant";
};

struct SimulateArgs {
  std::string protocol;
  std::string solver;  // overrides the protocol's solver when set
};

struct FitArgs {
  std::string model;
  std::string input;
  std::vector<std::string> init;
  std::string x_column;
  std::string y_column;
  std::string sigma_column;
  bool unweighted = false;
  std::optional<double> field;
  std::optional<double> g;
  int lines = 1;
};

struct ReproduceArgs {
  std::string target;
  double noise = 0.0;
};

int run_theory(const Context& ctx, const TheoryArgs& args);
int run_oracle(const Context& ctx, const OracleArgs& args);
int run_simulate(const Context& ctx, const SimulateArgs& args);
int run_fit(const Context& ctx, const FitArgs& args);
int run_reproduce(const Context& ctx, const ReproduceArgs& args);

/// Result document shared by `fit` and the recovery fits of `simulate`.
nlohmann::ordered_json fit_to_json(const FitResult& fit);

}  // namespace donorspin::cli
