#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace donorspin::cli {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

struct RunManifest {
  std::string run_id;  // shared by every output of one invocation
  std::string command_line;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;  // file names relative to the output directory
  std::string protocol;              // echoed protocol text, if any

  std::string to_json() const;
};

std::string utc_now();

/// Collects the files of one run in `dir` and writes a manifest sidecar
/// `<file>.manifest.json` next to each of them on finish().
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, RunManifest manifest);

  /// Writes `name` through `fill`; throws IoError when the file cannot be
  /// written.
  std::filesystem::path write(const std::string& name,
                              const std::function<void(std::ostream&)>& fill);
  void finish();
  void set_protocol(std::string text) { manifest_.protocol = std::move(text); }

  const RunManifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  RunManifest manifest_;
};

/// Bytes of a file; throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace donorspin::cli
