#include "daf/config.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace daf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: line " + std::to_string(lineno) +
                       " is not key=value: " + stripped);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw UsageError("config: empty key at line " + std::to_string(lineno));
    if (cfg.entries_.count(key))
      throw UsageError("config: duplicate key " + key);
    cfg.entries_[key] = value;
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end())
    throw UsageError("config: missing required key " + key);
  return it->second;
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long RunConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw UsageError("config: key " + key + " is not an integer: " + v);
  }
}

long RunConfig::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("config: key " + key + " is not a number: " + v);
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t RunConfig::get_seed() const {
  return static_cast<std::uint64_t>(get_int("seed", 0));
}

void RunConfig::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : entries_) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw UsageError("config: unknown key " + key);
  }
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [key, value] : entries_)
    out += key + "=" + value + "\n";
  return out;
}

RunDir::RunDir(const std::filesystem::path& dir, const RunConfig& config)
    : dir_(dir) {
  std::filesystem::create_directories(dir_);
  std::ofstream echo(dir_ / "config.resolved.txt", std::ios::trunc);
  if (!echo)
    throw std::runtime_error("cannot write config echo in " + dir_.string());
  echo << config.resolved_text();
}

void RunDir::log(const std::string& message) const {
  std::ofstream out(dir_ / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%d %H:%M:%S",
                std::gmtime(&t));
  out << stamp << " " << message << "\n";
}

}  // namespace daf::cli
