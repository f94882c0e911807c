#pragma once

// Flat key=value run configuration. Lines are `key = value`; `#` starts a
// comment. Command-line flags `--key value` override file values, and a
// repeated key keeps its last value.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/csv.hpp"

namespace eccentric {

enum class ValueType { integer, real, boolean, text, int_list };

inline std::string_view type_name(ValueType t) {
  switch (t) {
  case ValueType::integer:
    return "integer";
  case ValueType::real:
    return "real";
  case ValueType::boolean:
    return "boolean";
  case ValueType::text:
    return "string";
  case ValueType::int_list:
    return "comma-separated integer list";
  }
  return "?";
}

struct KeySpec {
  std::string name;
  ValueType type = ValueType::text;
  bool required = false;
  std::optional<std::string> fallback; // default when neither file nor flag sets it
  std::string help;
};

using Schema = std::vector<KeySpec>;
using KeyValues = std::vector<std::pair<std::string, std::string>>;

class ConfigError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::int64_t parse_integer(std::string_view text, const std::string &key) {
  text = trim(text);
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + std::string(text) + "'");
  return v;
}

inline bool parse_bool(std::string_view text, const std::string &key) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes")
    return true;
  if (text == "false" || text == "0" || text == "no")
    return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + std::string(text) + "'");
}

inline void check_type(const KeySpec &spec, const std::string &value) {
  switch (spec.type) {
  case ValueType::integer:
    parse_integer(value, spec.name);
    break;
  case ValueType::real: {
    double v = 0.0;
    try {
      v = parse_double(value, "key '" + spec.name + "'");
    } catch (const ValidationError &) {
      throw ConfigError("key '" + spec.name + "': expected a real number, got '" + value + "'");
    }
    if (!std::isfinite(v))
      throw ConfigError("key '" + spec.name + "': value must be finite");
    break;
  }
  case ValueType::boolean:
    parse_bool(value, spec.name);
    break;
  case ValueType::int_list:
    for (auto part : split(value, ','))
      parse_integer(part, spec.name);
    break;
  case ValueType::text:
    break;
  }
}

} // namespace detail

/// Parses key=value text; `source` names the file in diagnostics.
inline KeyValues parse_config_text(std::string_view text, const std::string &source) {
  KeyValues out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty())
      continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + " line " + std::to_string(line_no) + ": expected key = value");
    auto key = detail::trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(source + " line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(detail::trim(line.substr(eq + 1))));
  }
  return out;
}

inline KeyValues read_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), "'" + path + "'");
}

/// A validated set of values for one subcommand.
class RunConfig {
public:
  std::string subcommand;
  std::vector<std::string> warnings;

  bool has(const std::string &key) const { return values_.count(key) != 0; }

  const std::string &text(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  std::int64_t integer(const std::string &key) const {
    return detail::parse_integer(text(key), key);
  }
  double real(const std::string &key) const { return parse_double(text(key), "key '" + key + "'"); }
  bool boolean(const std::string &key) const {
    return has(key) && detail::parse_bool(text(key), key);
  }
  std::vector<int> int_list(const std::string &key) const {
    std::vector<int> out;
    for (auto part : split(text(key), ','))
      out.push_back(static_cast<int>(detail::parse_integer(part, key)));
    return out;
  }

  const std::map<std::string, std::string> &values() const { return values_; }
  const Schema &schema() const { return schema_; }

  /// defaults < file < flags. Unknown keys, type mismatches and missing
  /// required keys are errors naming the key.
  static RunConfig resolve(std::string subcommand, const Schema &schema, const KeyValues &file,
                           const KeyValues &flags) {
    RunConfig cfg;
    cfg.subcommand = std::move(subcommand);
    cfg.schema_ = schema;
    auto lookup = [&](const std::string &key) -> const KeySpec & {
      for (const auto &s : schema)
        if (s.name == key)
          return s;
      throw ConfigError("unknown key '" + key + "' for subcommand '" + cfg.subcommand + "'");
    };
    for (const auto &s : schema)
      if (s.fallback)
        cfg.values_[s.name] = *s.fallback;
    std::map<std::string, int> seen;
    for (const auto &[key, value] : file) {
      const KeySpec &spec = lookup(key);
      detail::check_type(spec, value);
      if (seen[key]++ > 0)
        cfg.warnings.push_back("duplicate key '" + key + "' in config file; last value wins");
      cfg.values_[key] = value;
    }
    seen.clear();
    for (const auto &[key, value] : flags) {
      const KeySpec &spec = lookup(key);
      detail::check_type(spec, value);
      if (seen[key]++ > 0)
        cfg.warnings.push_back("flag --" + key + " given more than once; last value wins");
      cfg.values_[key] = value;
    }
    for (const auto &s : schema)
      if (s.required && !cfg.has(s.name))
        throw ConfigError("missing required key '" + s.name + "'");
    return cfg;
  }

private:
  Schema schema_;
  std::map<std::string, std::string> values_;
};

inline RunConfig load_config(const std::string &path, const std::string &subcommand,
                             const Schema &schema, const KeyValues &flags = {}) {
  return RunConfig::resolve(subcommand, schema, read_config_file(path), flags);
}

} // namespace eccentric
