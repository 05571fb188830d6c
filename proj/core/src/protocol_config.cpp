#include "donorspin/protocol_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "donorspin/errors.hpp"

namespace donorspin {

namespace {

using json = nlohmann::json;

/// Object view that records which keys were read and reports paths.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const { return path_ + "." + std::string(key); }

  bool has(const char* key) {
    seen_.insert(key);
    return value_.contains(key);
  }

  double number(const char* key) {
    seen_.insert(key);
    if (!value_.contains(key)) throw ConfigError(child(key), "missing required key");
    const auto& v = value_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(child(key), "expected a finite number");
    return x;
  }
  double number(const char* key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const char* key) {
    const double x = number(key);
    if (!(x > 0.0)) throw ConfigError(child(key), "must be positive");
    return x;
  }
  double positive(const char* key, double fallback) { return has(key) ? positive(key) : fallback; }

  double non_negative(const char* key, double fallback) {
    if (!has(key)) return fallback;
    const double x = number(key);
    if (x < 0.0) throw ConfigError(child(key), "must be non-negative");
    return x;
  }

  int integer(const char* key, int fallback) {
    if (!has(key)) return fallback;
    const auto& v = value_.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = value_.at(key);
    if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key) {
    seen_.insert(key);
    if (!value_.contains(key)) throw ConfigError(child(key), "missing required key");
    const auto& v = value_.at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }

  /// Array of numbers or a grid string.
  std::vector<double> grid(const char* key) {
    seen_.insert(key);
    if (!value_.contains(key)) throw ConfigError(child(key), "missing required key");
    const auto& v = value_.at(key);
    if (v.is_string()) {
      try {
        return parse_grid(v.get<std::string>());
      } catch (const ArgumentError& e) {
        throw ConfigError(child(key), e.what());
      }
    }
    if (!v.is_array()) throw ConfigError(child(key), "expected an array or a grid string");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(child(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Node object(const char* key) {
    seen_.insert(key);
    return Node(value_.at(key), child(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return value_.at(key);
  }

  template <class F>
  auto guarded(const char* key, F&& f) {
    try {
      return f();
    } catch (const ArgumentError& e) {
      throw ConfigError(child(key), e.what());
    }
  }

  void collect_unknown(std::vector<std::string>& warnings) const {
    for (const auto& item : value_.items()) {
      if (!seen_.count(item.key())) {
        warnings.push_back("unknown key '" + child(item.key()) + "' ignored");
      }
    }
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

Line line_at(Node& node) {
  return node.guarded("line", [&] { return parse_line(node.string("line")); });
}

Drive parse_drive(Node& node, bool need_rate) {
  Drive d;
  d.line = line_at(node);
  d.rate = need_rate ? node.non_negative("rate_s", 0.0) : 0.0;
  if (need_rate && !node.has("rate_s")) throw ConfigError(node.child("rate_s"), "missing required key");
  d.detuning = node.number("detuning_eV", 0.0);
  d.all_polarizations = node.boolean("all_polarizations", false);
  return d;
}

Segment parse_segment(Node& node) {
  const std::string type = node.string("type");
  if (type == "scramble") return ScrambleSegment{};
  if (type == "wait") {
    return WaitSegment{node.positive("duration_s"), node.boolean("collect", false)};
  }
  if (type == "pump" || type == "probe") {
    const Drive d = parse_drive(node, true);
    const double duration = node.positive("duration_s");
    const bool collect = node.boolean("collect", true);
    if (type == "pump") return PumpSegment{d, duration, collect};
    return ProbeSegment{d, duration, collect};
  }
  throw ConfigError(node.child("type"), "unknown segment type '" + type +
                                            "' (expected pump|probe|wait|scramble)");
}

void parse_optics(Node& node, OpticsConfig& o) {
  o.radiative_lifetime = node.positive("radiative_lifetime_s", o.radiative_lifetime);
  o.z_branch_ratio = node.positive("z_branch_ratio", o.z_branch_ratio);
  o.voigt_h_fraction = node.number("voigt_h_fraction", o.voigt_h_fraction);
  if (o.voigt_h_fraction < 0.0 || o.voigt_h_fraction > 1.0) {
    throw ConfigError(node.child("voigt_h_fraction"), "must lie in [0, 1]");
  }
  o.homogeneous_fwhm = node.positive("homogeneous_fwhm_eV", o.homogeneous_fwhm);
  o.line_center = node.positive("line_center_eV", o.line_center);
  o.gamma0 = node.number("gamma0_s", o.gamma0);
  o.t1_override = node.non_negative("t1_override_s", o.t1_override);
}

void parse_ensemble(Node& node, EnsembleSpec& e) {
  e.n_donors = node.positive("n_donors", e.n_donors);
  e.inhomogeneous_fwhm = node.positive("inhomogeneous_fwhm_eV", e.inhomogeneous_fwhm);
  e.sub_ensembles = node.integer("sub_ensembles", e.sub_ensembles);
  if (e.sub_ensembles < 1) throw ConfigError(node.child("sub_ensembles"), "must be >= 1");
}

void parse_detection(Node& node, Detection& d) {
  if (node.has("channel")) {
    const auto c = node.string("channel");
    if (c == "lines") {
      d.channel = DetectionChannel::Lines;
    } else if (c == "satellite") {
      d.channel = DetectionChannel::Satellite;
    } else if (c == "all") {
      d.channel = DetectionChannel::All;
    } else {
      throw ConfigError(node.child("channel"), "expected lines|satellite|all, got '" + c + "'");
    }
  }
  if (node.has("lines")) {
    const auto& arr = node.raw("lines");
    if (!arr.is_array()) throw ConfigError(node.child("lines"), "expected an array of line names");
    d.lines.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = node.child("lines") + "[" + std::to_string(i) + "]";
      if (!arr[i].is_string()) throw ConfigError(where, "expected a line name");
      try {
        d.lines.push_back(parse_line(arr[i].get<std::string>()));
      } catch (const ArgumentError& e) {
        throw ConfigError(where, e.what());
      }
    }
  }
  d.efficiency = node.non_negative("efficiency", d.efficiency);
  if (d.efficiency > 1.0) throw ConfigError(node.child("efficiency"), "must not exceed 1");
  d.dark_rate = node.non_negative("dark_rate_s", d.dark_rate);
  d.satellite_fraction = node.non_negative("satellite_fraction", d.satellite_fraction);
  if (d.satellite_fraction > 1.0) {
    throw ConfigError(node.child("satellite_fraction"), "must not exceed 1");
  }
  if (d.channel == DetectionChannel::Lines && d.lines.empty()) {
    throw ConfigError(node.child("lines"), "line detection needs at least one line");
  }
}

ProtocolKind parse_kind(Node& root) {
  const auto k = root.string("kind");
  if (k == "trace") return ProtocolKind::Trace;
  if (k == "t1") return ProtocolKind::T1;
  if (k == "pump_probe") return ProtocolKind::PumpProbe;
  if (k == "spectrum") return ProtocolKind::Spectrum;
  if (k == "ple") return ProtocolKind::Ple;
  throw ConfigError(root.child("kind"),
                    "unknown kind '" + k + "' (expected trace|t1|pump_probe|spectrum|ple)");
}

}  // namespace

std::string_view to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Trace:
      return "trace";
    case ProtocolKind::T1:
      return "t1";
    case ProtocolKind::PumpProbe:
      return "pump_probe";
    case ProtocolKind::Spectrum:
      return "spectrum";
    case ProtocolKind::Ple:
      return "ple";
  }
  return "?";
}

std::vector<double> parse_grid(std::string_view text) {
  auto to_number = [&](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(x)) {
      throw ArgumentError("invalid number '" + std::string(s) + "' in grid '" +
                          std::string(text) + "'");
    }
    return x;
  };
  std::vector<std::string_view> parts;
  const char sep = text.find(':') != std::string_view::npos ? ':' : ',';
  std::size_t pos = 0;
  while (true) {
    const auto next = text.find(sep, pos);
    parts.push_back(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 3) throw ArgumentError("grid '" + std::string(text) + "' is not start:stop:step");
    const double start = to_number(parts[0]);
    const double stop = to_number(parts[1]);
    const double step = to_number(parts[2]);
    if (!(step > 0.0)) throw ArgumentError("grid step must be positive");
    if (stop < start) throw ArgumentError("grid stop must not precede start");
    const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    if (n > 10'000'000) throw ArgumentError("grid has too many points");
    for (long long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    for (auto p : parts) out.push_back(to_number(p));
  }
  return out;
}

ProtocolConfig parse_protocol(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("parse error: ") + e.what());
  }
  ProtocolConfig cfg;
  cfg.text = std::string(json_text);
  Node root(doc, "$");
  cfg.kind = parse_kind(root);
  cfg.geometry = root.guarded("geometry", [&] { return parse_geometry(root.string("geometry")); });
  if (!root.has("B_T")) throw ConfigError(root.child("B_T"), "missing required key");
  cfg.field_T = root.non_negative("B_T", 0.0);
  cfg.temperature_K = root.non_negative("T_K", cfg.temperature_K);

  if (root.has("optics")) {
    auto n = root.object("optics");
    parse_optics(n, cfg.optics);
    n.collect_unknown(cfg.warnings);
  }
  cfg.optics.t1_override = root.non_negative("t1_override_s", cfg.optics.t1_override);
  if (root.has("ensemble")) {
    auto n = root.object("ensemble");
    parse_ensemble(n, cfg.ensemble);
    n.collect_unknown(cfg.warnings);
  }
  Detection detection;
  if (root.has("detection")) {
    auto n = root.object("detection");
    parse_detection(n, detection);
    n.collect_unknown(cfg.warnings);
  }
  if (root.has("solver")) {
    auto n = root.object("solver");
    if (n.has("kind")) {
      cfg.solver.kind = n.guarded("kind", [&] { return parse_solver(n.string("kind")); });
    }
    cfg.solver.step = n.positive("step_s", cfg.solver.step);
    n.collect_unknown(cfg.warnings);
  }

  switch (cfg.kind) {
    case ProtocolKind::Trace: {
      cfg.sequence.detection = detection;
      cfg.sequence.repetitions = root.integer("repetitions", 1);
      if (cfg.sequence.repetitions < 1) throw ConfigError(root.child("repetitions"), "must be >= 1");
      cfg.sequence.bin_width = root.positive("bin_width_s", cfg.sequence.bin_width);
      if (!root.has("segments")) throw ConfigError(root.child("segments"), "missing required key");
      const auto& segs = root.raw("segments");
      if (!segs.is_array() || segs.empty()) {
        throw ConfigError(root.child("segments"), "expected a non-empty array");
      }
      bool any_collect = false;
      for (std::size_t i = 0; i < segs.size(); ++i) {
        Node n(segs[i], root.child("segments") + "[" + std::to_string(i) + "]");
        cfg.sequence.segments.push_back(parse_segment(n));
        n.collect_unknown(cfg.warnings);
        const auto& s = cfg.sequence.segments.back();
        if (const auto* p = std::get_if<PumpSegment>(&s)) any_collect = any_collect || p->collect;
        if (const auto* p = std::get_if<ProbeSegment>(&s)) any_collect = any_collect || p->collect;
        if (const auto* p = std::get_if<WaitSegment>(&s)) any_collect = any_collect || p->collect;
      }
      if (!any_collect) throw ConfigError(root.child("segments"), "no segment collects photons");
      if (root.has("initial")) {
        const auto& v = root.raw("initial");
        if (v.is_string() && v.get<std::string>() == "thermal") {
          cfg.initial.reset();
        } else if (v.is_array() && v.size() == 4) {
          Eigen::Vector4d p;
          for (int i = 0; i < 4; ++i) {
            if (!v[i].is_number()) throw ConfigError(root.child("initial"), "expected numbers");
            p[i] = v[i].get<double>();
          }
          if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9) {
            throw ConfigError(root.child("initial"), "populations must be non-negative and sum to 1");
          }
          cfg.initial = p;
        } else {
          throw ConfigError(root.child("initial"), "expected \"thermal\" or four populations");
        }
      }
      break;
    }
    case ProtocolKind::T1:
    case ProtocolKind::PumpProbe: {
      auto& r = cfg.recovery;
      r.detection = detection;
      r.solver = cfg.solver;
      if (!root.has("pump")) throw ConfigError(root.child("pump"), "missing required key");
      {
        auto n = root.object("pump");
        r.pump.drive = parse_drive(n, true);
        r.pump.duration = n.positive("duration_s");
        r.pump.collect = false;
        n.collect_unknown(cfg.warnings);
      }
      if (root.has("probe")) {
        auto n = root.object("probe");
        r.probe = parse_drive(n, true);
        n.collect_unknown(cfg.warnings);
      }
      r.taus = root.grid("taus_s");
      for (std::size_t i = 0; i < r.taus.size(); ++i) {
        if (r.taus[i] < 0.0 || (i > 0 && r.taus[i] < r.taus[i - 1])) {
          throw ConfigError(root.child("taus_s"), "delays must be non-negative and ascending");
        }
      }
      r.window = root.positive("window_s");
      if (cfg.kind == ProtocolKind::T1 && r.window > r.pump.duration) {
        throw ConfigError(root.child("window_s"), "window is longer than the pump segment");
      }
      r.repetitions = root.integer("repetitions", r.repetitions);
      if (r.repetitions < 1) throw ConfigError(root.child("repetitions"), "must be >= 1");
      break;
    }
    case ProtocolKind::Spectrum:
      cfg.spectrum.line_center = cfg.optics.line_center;
      cfg.spectrum.half_range = root.positive("half_range_eV", cfg.spectrum.half_range);
      cfg.spectrum.step = root.positive("step_eV", cfg.spectrum.step);
      cfg.spectrum.lorentzian_fwhm = root.non_negative("lorentzian_fwhm_eV", cfg.spectrum.lorentzian_fwhm);
      break;
    case ProtocolKind::Ple:
      cfg.ple.detection = detection;
      cfg.scan_detuning = root.grid("scan_detuning_eV");
      cfg.ple.drive_rate = root.non_negative("drive_rate_s", cfg.ple.drive_rate);
      cfg.ple.integration_time = root.positive("integration_time_s", cfg.ple.integration_time);
      break;
  }
  root.collect_unknown(cfg.warnings);
  return cfg;
}

ProtocolConfig load_protocol_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open protocol '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_protocol(buffer.str());
}

}  // namespace donorspin
