#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using donorspin::cli::run;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "donorspin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("donorspin_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             std::to_string(counter++) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str() const { return path_.string(); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  Table rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  std::getline(in, line);
  header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(row);
  }
  return rows;
}

std::string protocol(const std::string& name) { return std::string(DONORSPIN_PROTOCOL_DIR) + "/" + name; }

}  // namespace

TEST(CliTheory, VoigtSweepAtFiveTesla) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "theory", "--geometry", "voigt", "--b", "2.25:7:0.25", "--temp", "1.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "theory_voigt.csv");
  ASSERT_EQ(rows.size(), 20u);
  bool found = false;
  for (const auto& row : rows) {
    if (std::stod(row.at("B_T")) == 5.0) {
      EXPECT_NEAR(std::stod(row.at("T1_s")), 7.8e-3, 0.05e-3);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_TRUE(fs::exists(dir / "theory_voigt.svg"));
  EXPECT_TRUE(fs::exists(dir / "theory_voigt.csv.manifest.json"));
}

TEST(CliTheory, FaradayHeadline) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "theory", "--geometry", "faraday", "--b", "1.75", "--temp", "1.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "theory_faraday.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(std::stod(rows[0].at("T1_s")), 0.50, 0.01);
}

TEST(CliTheory, UsageErrors) {
  const auto r = cli({"theory", "--b", "5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("geometry"), std::string::npos);
  EXPECT_EQ(cli({"theory", "--geometry", "sideways"}).code, 2);
  EXPECT_EQ(cli({"theory", "--geometry", "voigt", "--b", "5:1:1"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
}

TEST(CliTheory, UnwritableOutputIsIoError) {
  TempDir dir;
  std::ofstream(dir / "blocker") << "x";
  const auto r = cli({"--out", (dir / "blocker" / "sub").string(), "theory", "--geometry", "voigt", "--b", "5"});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(CliTheory, MaterialConfigErrors) {
  TempDir dir;
  std::ofstream(dir / "bad.json") << R"({"s_t_m_s": 0})";
  EXPECT_EQ(cli({"--config", (dir / "bad.json").string(), "--out", dir.str(), "theory", "--geometry", "voigt"}).code, 2);
  EXPECT_EQ(cli({"--config", (dir / "missing.json").string(), "--out", dir.str(), "theory", "--geometry", "voigt"}).code, 3);
}

TEST(CliOracle, DefaultGridPasses) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "oracle"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "oracle.csv");
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& row : rows) EXPECT_LT(std::stod(row.at("rel_err")), 5e-3);
}

TEST(CliOracle, ThresholdAndOrderGuards) {
  TempDir dir;
  EXPECT_EQ(cli({"--out", dir.str(), "oracle", "--quad-order", "4"}).code, 2);
  // The oracle agrees with the closed form at rounding level, so only a
  // sub-rounding tolerance can fail.
  EXPECT_EQ(cli({"--out", dir.str(), "--tolerance", "1e-17", "oracle"}).code, 1);
  EXPECT_EQ(cli({"--out", dir.str(), "--tolerance", "1e-9", "oracle"}).code, 0);
  EXPECT_EQ(cli({"--out", dir.str(), "oracle", "--piezo-sum", "sideways"}).code, 2);
}

TEST(CliSimulate, SeededRunsAreByteIdentical) {
  TempDir a, b;
  const auto ra = cli({"--seed", "42", "--out", a.str(), "simulate", protocol("t1_voigt_5T.json")});
  const auto rb = cli({"--seed", "42", "--out", b.str(), "simulate", protocol("t1_voigt_5T.json")});
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  EXPECT_EQ(slurp(a / "recovery.csv"), slurp(b / "recovery.csv"));
  EXPECT_EQ(slurp(a / "recovery_fit.json"), slurp(b / "recovery_fit.json"));
  const auto fit = nlohmann::json::parse(slurp(a / "recovery_fit.json"));
  EXPECT_NEAR(fit["params"]["T1"].get<double>() / 0.01, 1.0, 0.05);

  TempDir c;
  ASSERT_EQ(cli({"--seed", "43", "--out", c.str(), "simulate", protocol("t1_voigt_5T.json")}).code, 0);
  EXPECT_NE(slurp(a / "recovery.csv"), slurp(c / "recovery.csv"));
}

TEST(CliSimulate, OpticalPumpingTraceDecays) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "simulate", protocol("op_trace_voigt_5p5T.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "trace.csv");
  ASSERT_EQ(rows.size(), 400u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double prev = std::stod(rows[i - 1].at("expected_counts"));
    EXPECT_LE(std::stod(rows[i].at("expected_counts")), prev * (1.0 + 1e-12)) << i;
  }
  EXPECT_LT(std::stod(rows.back().at("expected_counts")), 0.05 * std::stod(rows.front().at("expected_counts")));
}

TEST(CliSimulate, PumpProbeRecoversInjectedT1) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "simulate", protocol("pump_probe_faraday_5T.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fit = nlohmann::json::parse(slurp(dir / "recovery_fit.json"));
  EXPECT_TRUE(fit["converged"].get<bool>());
  EXPECT_NEAR(fit["params"]["T1"].get<double>() / 0.01, 1.0, 0.05);
}

TEST(CliSimulate, SpectrumAndPle) {
  TempDir dir;
  ASSERT_EQ(cli({"--out", dir.str(), "simulate", protocol("spectrum_faraday_5T.json")}).code, 0);
  EXPECT_FALSE(read_csv(dir / "spectrum.csv").empty());
  ASSERT_EQ(cli({"--out", dir.str(), "simulate", protocol("ple_voigt_5T.json")}).code, 0);
  EXPECT_EQ(read_csv(dir / "ple.csv").size(), 351u);
}

TEST(CliSimulate, MalformedProtocolNamesSegment) {
  TempDir dir;
  std::ofstream(dir / "bad.json") << R"({"kind": "trace", "geometry": "voigt", "B_T": 5,
    "segments": [ { "type": "scramble" }, { "type": "pump", "line": "H_down", "rate_s": 1e6, "duration_s": -1 } ] })";
  const auto r = cli({"--out", dir.str(), "simulate", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("segments[1]"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"--out", dir.str(), "simulate", (dir / "none.json").string()}).code, 3);
}

TEST(CliFit, FitsRecoveryCsv) {
  TempDir dir;
  ASSERT_EQ(cli({"--out", dir.str(), "simulate", protocol("t1_voigt_5T.json")}).code, 0);
  const auto r = cli({"fit", "--model", "exp", "--in", (dir / "recovery.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["model"], "exp");
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_NEAR(j["params"]["T1"].get<double>() / 0.01, 1.0, 0.05);
  EXPECT_TRUE(j.contains("std_errors"));
  EXPECT_TRUE(j.contains("residual_norm"));
  EXPECT_EQ(cli({"fit", "--model", "exp", "--in", (dir / "recovery.csv").string(), "--init", "bogus=1"}).code, 2);
  EXPECT_EQ(cli({"fit", "--model", "cubic", "--in", (dir / "recovery.csv").string()}).code, 2);
  EXPECT_EQ(cli({"fit", "--model", "exp", "--in", (dir / "nope.csv").string()}).code, 3);
}

TEST(CliFit, PowerLawWithFixedExponent) {
  TempDir dir;
  std::ofstream f(dir / "t1.csv");
  f.precision(17);
  f << "B_T,T1_s\n";
  for (double b = 2.0; b <= 7.0; b += 1.0) f << b << ',' << 0.3 * std::pow(b, -5.0) << '\n';
  f.close();
  const auto free = cli({"fit", "--model", "powerlaw", "--in", (dir / "t1.csv").string()});
  ASSERT_EQ(free.code, 0) << free.err;
  EXPECT_NEAR(nlohmann::json::parse(free.out)["params"]["n"].get<double>(), 5.0, 1e-6);
  const auto fixed = cli({"fit", "--model", "powerlaw", "--in", (dir / "t1.csv").string(), "--init", "n=4"});
  ASSERT_EQ(fixed.code, 0) << fixed.err;
  EXPECT_EQ(nlohmann::json::parse(fixed.out)["params"]["n"].get<double>(), 4.0);
}

TEST(CliReproduce, Fig3RatioColumn) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "reproduce", "fig3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "fig3_theory.csv");
  ASSERT_EQ(rows.size(), 29u);
  for (const auto& row : rows) EXPECT_NEAR(std::stod(row.at("ratio_faraday_over_voigt")), 0.5, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "fig3_exponents.csv"));
  EXPECT_TRUE(fs::exists(dir / "fig3.svg"));
}

TEST(CliReproduce, Fig5WithinOneSigma) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "reproduce", "fig5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "fig5_fits.csv");
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& row : rows) {
    EXPECT_LE(std::abs(std::stod(row.at("gamma_fit_ms1")) - std::stod(row.at("gamma_true_ms1"))),
              std::stod(row.at("gamma_err_ms1")));
  }
  EXPECT_NEAR(std::stod(rows[0].at("gamma_fit_ms1")), 0.1531, 1e-6);
}

TEST(CliReproduce, Fig9ZeemanFactor) {
  TempDir dir;
  const auto r = cli({"--out", dir.str(), "reproduce", "fig9"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv(dir / "fig9_zeeman.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(std::stod(rows[0].at("g_eff")), 3.19, 0.02);
}

TEST(CliReproduce, UnknownTarget) {
  EXPECT_EQ(cli({"reproduce", "fig4"}).code, 2);
  EXPECT_EQ(cli({"reproduce"}).code, 2);
}

TEST(CliManifest, OutputsShareRunIdentifier) {
  TempDir dir;
  ASSERT_EQ(cli({"--seed", "7", "--out", dir.str(), "reproduce", "fig9"}).code, 0);
  std::string run_id;
  int count = 0;
  for (const auto& entry : fs::directory_iterator(dir / "")) {
    const auto name = entry.path().filename().string();
    if (name.size() < 14 || name.substr(name.size() - 14) != ".manifest.json") continue;
    const auto m = nlohmann::json::parse(slurp(entry.path()));
    if (run_id.empty()) run_id = m["run_id"];
    EXPECT_EQ(m["run_id"], run_id);
    EXPECT_EQ(m["seed"], 7);
    EXPECT_TRUE(m.contains("config_digest"));
    EXPECT_TRUE(m.contains("tool_version"));
    EXPECT_GE(m["outputs"].size(), 4u);
    ++count;
  }
  EXPECT_EQ(count, 4);
  EXPECT_FALSE(run_id.empty());

  // Same command line, seed and config: same identifier.
  ASSERT_EQ(cli({"--seed", "7", "--out", dir.str(), "reproduce", "fig9"}).code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "fig9_zeeman.csv.manifest.json"))["run_id"], run_id);
}
