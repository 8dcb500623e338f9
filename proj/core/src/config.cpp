#include "cabps/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cabps {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size();
}

const std::vector<std::string> kSamplerKinds{"bps", "sl_pdmp", "ca_bps"};
const std::vector<std::string> kOverridable{"window_T", "grid_step",
                                            "refresh_rate"};

}  // namespace

ConfigError::ConfigError(const std::string& source, int line,
                         const std::string& key, const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : "") +
                         ": " + (key.empty() ? "" : "'" + key + "': ") + what),
      line_(line),
      key_(key) {}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"target.name", "banana", "banana | gaussian | mixture"},
      {"target.a", "0.05", "banana: weight of (1 - x1)^2"},
      {"target.b", "5000", "banana: weight of (x2 - x1^2)^2"},
      {"target.dim", "20", "gaussian: dimension"},
      {"target.delta", "1", "gaussian: spectral gap (precision of coords 2..d)"},
      {"target.delta_grid", "", "gaussian: comma list of gaps; overrides target.delta"},
      {"metric.hardness", "1000", "SoftAbs hardness"},
      {"ode.steps_per_unit_time", "200", "velocity-flow RK4 steps per unit time"},
      {"ode.t_max_velocity", "1", "largest single RK4 step"},
      {"sampler.kind", "bps,ca_bps", "comma list of bps | sl_pdmp | ca_bps"},
      {"sampler.window_T", "1", "window length / BPS sample spacing"},
      {"sampler.grid_step", "0.1", "rate cell length"},
      {"sampler.refresh_rate", "1/window_T", "BPS refreshment rate"},
      {"sampler.burn_in", "0.1", "fraction of samples discarded"},
      {"sampler.<kind>.window_T", "sampler.window_T",
       "per-sampler window; a list gives one value per delta"},
      {"sampler.<kind>.grid_step", "sampler.grid_step",
       "per-sampler grid step; a list gives one value per delta"},
      {"sampler.<kind>.refresh_rate", "sampler.refresh_rate", "per-sampler refresh rate"},
      {"experiment.replicates", "100", "replicate chains per sampler"},
      {"experiment.budget_seconds", "10", "wall-clock budget per chain"},
      {"experiment.budget_windows", "0", "window budget per chain (0 = none)"},
      {"experiment.tune", "false", "tune (T, grid step) before running"},
      {"experiment.seed", "1", "base seed"},
      {"tune.outer_iterations", "10", "Brent evaluations over log T"},
      {"tune.inner_iterations", "10", "Brent evaluations over log grid step"},
      {"tune.replicates", "experiment.replicates", "replicates per objective evaluation"},
      {"tune.budget_seconds", "experiment.budget_seconds", "budget per tuning chain"},
      {"tune.budget_windows", "experiment.budget_windows", "window budget per tuning chain"},
      {"tune.window_lo", "0.001", "lower T bracket"},
      {"tune.window_hi", "10", "upper T bracket"},
      {"tune.step_lo", "0.0001", "lower grid-step bracket"},
      {"tune.step_hi", "1", "upper grid-step bracket"},
      {"ratio.beta", "1,2,10,100", "per-event cost multipliers of CA-BPS"},
      {"ratio.epsilon", "0,1e-7,1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1",
       "per-event costs of BPS in seconds"},
      {"bench.record_wall_time", "true", "write measured wall time (false writes 0)"},
      {"plot.region", "-3,4,-2,10", "plot-metric window x_min,x_max,y_min,y_max"},
      {"plot.grid", "9", "plot-metric ellipses per axis"},
  };
  return keys;
}

bool Config::is_known_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.name == key) return true;
  const std::string prefix = "sampler.";
  if (key.rfind(prefix, 0) != 0) return false;
  const auto rest = key.substr(prefix.size());
  const auto dot = rest.find('.');
  if (dot == std::string::npos) return false;
  const auto kind = rest.substr(0, dot);
  const auto field = rest.substr(dot + 1);
  return std::find(kSamplerKinds.begin(), kSamplerKinds.end(), kind) !=
             kSamplerKinds.end() &&
         std::find(kOverridable.begin(), kOverridable.end(), field) !=
             kOverridable.end();
}

Config Config::parse(std::istream& in, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source, line, "", "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line, "", "missing key");
    if (!is_known_key(key)) throw ConfigError(source, line, key, "unknown key");
    if (cfg.entries_.count(key))
      throw ConfigError(source, line, key,
                        "duplicate key (first set on line " +
                            std::to_string(cfg.entries_[key].line) + ")");
    cfg.entries_[key] = {value, line};
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError(source_, 0, key, "unknown key");
  entries_[key] = {value, 0};
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = key.empty() ? entries_.end() : entries_.find(key);
  throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, key, what);
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  double v;
  if (!parse_double(get_string(key, ""), v)) fail(key, "expected a number");
  return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key, "");
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected an integer");
  return v;
}

std::uint64_t Config::get_uint(const std::string& key,
                               std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key, "");
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(key, "expected a nonnegative integer");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key, "");
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(key, "expected true or false");
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get_string(key, ""))) {
    double v;
    if (!parse_double(item, v)) fail(key, "'" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(
    const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  return split_list(get_string(key, ""));
}

std::string Config::echo() const {
  std::ostringstream out;
  for (const auto& [k, e] : entries_) out << k << " = " << e.value << '\n';
  return out.str();
}

}  // namespace cabps
