#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace daf::cli {

/// A usage problem: bad flags, unknown/missing config keys, malformed
/// values. Mapped to exit code 1, unlike runtime failures (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration. '#' starts a comment; keys may not
/// repeat; every command validates against its own allowed-key set.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig parse_file(const std::filesystem::path& path);
  static RunConfig parse_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_seed() const;

  /// Throws UsageError naming the first key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

  /// Sorted key=value lines; the byte-stable config echo.
  std::string resolved_text() const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

/// Output directory bookkeeping: echoes the resolved config before any
/// computation and exposes a timestamped sidecar log (the only output
/// that is not byte-reproducible).
class RunDir {
 public:
  explicit RunDir(const std::filesystem::path& dir, const RunConfig& config);
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file(const std::string& name) const {
    return dir_ / name;
  }
  void log(const std::string& message) const;

 private:
  std::filesystem::path dir_;
};

int cmd_synth(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_eval_props(const RunConfig& config);
int cmd_lossmap(const RunConfig& config);
int cmd_navigate(const RunConfig& config);
int cmd_report(const RunConfig& config);

}  // namespace daf::cli
