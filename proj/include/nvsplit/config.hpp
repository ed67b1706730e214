#ifndef NVSPLIT_CONFIG_HPP
#define NVSPLIT_CONFIG_HPP

#include <nvsplit/io.hpp>
#include <nvsplit/registry.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nvsplit {

/// A config error that knows where in its source it happened.
class ConfigParseError : public ConfigError {
 public:
  ConfigParseError(std::string source, int line, int column, const std::string& msg)
      : ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct Setting {
  std::string value;
  std::string source;  ///< file name or "command line"
  int line = 0;
  int column = 0;  ///< column of the value
};

using Settings = std::map<std::string, Setting>;

/// Flat `key = value` text; `#` starts a comment, blank lines are ignored.
inline Settings parse_settings(std::string_view text, const std::string& source) {
  Settings out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigParseError(source, line_no, static_cast<int>(line.size()) + 1, "expected 'key = value'");
    }
    std::string_view key = line.substr(first, eq - first);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.remove_suffix(1);
    if (key.empty()) throw ConfigParseError(source, line_no, static_cast<int>(eq) + 1, "missing key before '='");
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char c = key[i];
      const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
      if (!ok) {
        throw ConfigParseError(source, line_no, static_cast<int>(first + i) + 1,
                               std::string("invalid character '") + c + "' in key");
      }
    }
    std::size_t vstart = line.find_first_not_of(" \t", eq + 1);
    std::string_view value = vstart == std::string_view::npos ? std::string_view{} : line.substr(vstart);
    while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.remove_suffix(1);
    if (value.empty()) {
      throw ConfigParseError(source, line_no, static_cast<int>(eq) + 2, "missing value for '" + std::string(key) + "'");
    }
    if (out.contains(std::string(key))) {
      throw ConfigParseError(source, line_no, static_cast<int>(first) + 1, "duplicate key '" + std::string(key) + "'");
    }
    out[std::string(key)] = Setting{std::string(value), source, line_no, static_cast<int>(vstart) + 1};
    if (eol == text.size()) break;
  }
  return out;
}

/// Resolved experiment configuration. Every field has a concrete value after
/// resolve_config, except the seed, which must be given explicitly.
struct ExperimentConfig {
  std::string model = "bs";
  ParamMap params;
  std::string scheme = "nv";
  std::vector<int> n_list{16, 32, 64, 128, 256};
  int paths = 1000;
  double horizon = 1.0;
  std::optional<std::vector<double>> x0;
  std::optional<std::uint64_t> seed;
  int ref_refine = 16;
  std::string out = ".";
  double alpha = 0.01;
  std::string kind = "U_N";
  std::vector<double> t_list;
  int substeps = 0;
  int threads = 0;  ///< execution detail, not echoed in manifests
};

namespace detail {

[[noreturn]] inline void bad_value(const std::string& key, const Setting& s, const std::string& why) {
  throw ConfigParseError(s.source, s.line, s.column, "invalid value '" + s.value + "' for '" + key + "': " + why);
}

template <typename T>
T parse_number(const std::string& key, const Setting& s, std::string_view text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(key, s, "not a number");
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const Setting& s) {
  std::vector<T> out;
  std::string_view rest = s.value;
  while (true) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) bad_value(key, s, "empty list item");
    out.push_back(parse_number<T>(key, s, item));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

}  // namespace detail

/// Applies settings (file first, then flags, so flags override) onto defaults.
/// Simulation ladders must be powers of two; `dyadic_n = false` lifts that for
/// commands that only evaluate closed forms.
inline ExperimentConfig resolve_config(const Settings& file, const Settings& flags, bool dyadic_n = true) {
  Settings merged = file;
  for (const auto& [k, v] : flags) merged[k] = v;

  ExperimentConfig cfg;
  for (const auto& [key, s] : merged) {
    if (key == "model") {
      cfg.model = s.value;
    } else if (key == "scheme") {
      cfg.scheme = s.value;
    } else if (key == "N") {
      cfg.n_list = detail::parse_list<int>(key, s);
      for (int n : cfg.n_list) {
        if (n < 1) detail::bad_value(key, s, "N values must be positive");
        if (dyadic_n && !std::has_single_bit(static_cast<unsigned>(n))) detail::bad_value(key, s, "N values must be powers of two");
      }
    } else if (key == "M") {
      cfg.paths = detail::parse_number<int>(key, s, s.value);
      if (cfg.paths < 2) detail::bad_value(key, s, "need at least 2 paths");
    } else if (key == "T") {
      cfg.horizon = detail::parse_number<double>(key, s, s.value);
      if (!(cfg.horizon > 0.0)) detail::bad_value(key, s, "horizon must be positive");
    } else if (key == "x0") {
      cfg.x0 = detail::parse_list<double>(key, s);
    } else if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(key, s, s.value);
    } else if (key == "ref-refine") {
      cfg.ref_refine = detail::parse_number<int>(key, s, s.value);
      if (cfg.ref_refine < 2 || !std::has_single_bit(static_cast<unsigned>(cfg.ref_refine))) {
        detail::bad_value(key, s, "must be a power of two >= 2");
      }
    } else if (key == "out") {
      cfg.out = s.value;
    } else if (key == "alpha") {
      cfg.alpha = detail::parse_number<double>(key, s, s.value);
      if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) detail::bad_value(key, s, "must lie in (0, 1)");
    } else if (key == "kind") {
      cfg.kind = s.value;
      if (cfg.kind != "U_N" && cfg.kind != "V_N") detail::bad_value(key, s, "expected U_N or V_N");
    } else if (key == "t") {
      cfg.t_list = detail::parse_list<double>(key, s);
    } else if (key == "substeps") {
      cfg.substeps = detail::parse_number<int>(key, s, s.value);
      if (cfg.substeps < 0) detail::bad_value(key, s, "must be >= 0 (0 = calibrate)");
    } else if (key == "threads") {
      cfg.threads = detail::parse_number<int>(key, s, s.value);
    } else if (key.starts_with("param.")) {
      cfg.params[key.substr(6)] = detail::parse_number<double>(key, s, s.value);
    } else {
      throw ConfigParseError(s.source, s.line, 1, "unknown key '" + key + "'");
    }
  }
  std::sort(cfg.n_list.begin(), cfg.n_list.end());
  return cfg;
}

inline SdeModel build_model(const ExperimentConfig& cfg) {
  std::optional<Vec> x0;
  if (cfg.x0) {
    const auto want = default_x0(cfg.model).size();
    if (static_cast<Eigen::Index>(cfg.x0->size()) != want) {
      throw ConfigError("x0 has " + std::to_string(cfg.x0->size()) + " components, model '" + cfg.model +
                        "' has dimension " + std::to_string(want));
    }
    Vec v(static_cast<Eigen::Index>(cfg.x0->size()));
    for (std::size_t i = 0; i < cfg.x0->size(); ++i) v[static_cast<Eigen::Index>(i)] = (*cfg.x0)[i];
    x0 = v;
  }
  return make_model(cfg.model, cfg.params, cfg.horizon, x0);
}

/// Resolved configuration, defaults included, as manifest key/value pairs.
inline std::vector<std::pair<std::string, std::string>> manifest_entries(const std::string& command,
                                                                         const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto join_int = [](const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + std::to_string(xs[i]);
    return s;
  };
  auto join_dbl = [](const auto& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + io::fmt(xs[i]);
    return s;
  };
  kv.emplace_back("command", command);
  kv.emplace_back("model", cfg.model);
  for (const auto& [k, v] : resolve_params(cfg.model, cfg.params)) kv.emplace_back("param." + k, io::fmt(v));
  const SdeModel m = build_model(cfg);
  std::vector<double> x0(m.x0.data(), m.x0.data() + m.x0.size());
  kv.emplace_back("x0", join_dbl(x0));
  kv.emplace_back("T", io::fmt(cfg.horizon));
  kv.emplace_back("scheme", cfg.scheme);
  kv.emplace_back("N", join_int(cfg.n_list));
  kv.emplace_back("M", std::to_string(cfg.paths));
  kv.emplace_back("seed", cfg.seed ? std::to_string(*cfg.seed) : std::string("none"));
  kv.emplace_back("ref-refine", std::to_string(cfg.ref_refine));
  kv.emplace_back("alpha", io::fmt(cfg.alpha));
  kv.emplace_back("kind", cfg.kind);
  kv.emplace_back("t", join_dbl(cfg.t_list));
  kv.emplace_back("substeps", std::to_string(cfg.substeps));
  return kv;
}

}  // namespace nvsplit

#endif  // NVSPLIT_CONFIG_HPP
