#pragma once

#include "effdyn/errors.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace effdyn {

/// Config text format:
///
///   # comment
///   experiment = converge          (optional; must match the subcommand)
///   [section]
///   key = value                    # trailing comments are allowed
///
/// Values are integers, reals, booleans (true/false), strings (bare or "quoted")
/// and lists in brackets: [2, 4, 8].
enum class ValueType { integer, real, boolean, string, int_list, real_list };

using ConfigValue =
    std::variant<std::int64_t, double, bool, std::string, std::vector<std::int64_t>, std::vector<double>>;

std::string type_name(ValueType t);
std::string format_value(const ConfigValue& v);

class ExperimentConfig;

struct KeySpec {
  std::string section;
  std::string key;
  ValueType type;
  /// Literal default; absent means required unless derived is set.
  std::optional<ConfigValue> fallback;
  /// Default computed from the other resolved keys.
  std::function<ConfigValue(const ExperimentConfig&)> derived;
  /// Allowed values for string keys; empty means unrestricted.
  std::vector<std::string> choices;
  /// Returns an error message for an invalid value, empty when valid.
  std::function<std::string(const ConfigValue&)> check;
  std::string doc;

  std::string path() const { return section + "." + key; }
};

const std::vector<std::string>& experiment_names();
const std::vector<KeySpec>& schema_for(const std::string& experiment);

class ExperimentConfig {
public:
  std::string experiment;
  /// Keyed by "section.key", complete after parse_config.
  std::map<std::string, ConfigValue> values;
  /// Derived facts echoed into the resolved config (e.g. basis dimensions).
  std::vector<std::string> echoes;

  bool has(const std::string& path) const { return values.count(path) != 0; }
  std::int64_t integer(const std::string& path) const;
  double real(const std::string& path) const;
  bool boolean(const std::string& path) const;
  const std::string& text(const std::string& path) const;
  std::vector<std::int64_t> int_list(const std::string& path) const;
  std::vector<double> real_list(const std::string& path) const;

  /// Fully resolved config in the input format, sections in schema order.
  std::string resolved_text() const;
};

/// Parses and validates; throws ConfigError listing every violation found.
/// When `experiment` is empty the file must name it.
ExperimentConfig parse_config(const std::string& text, const std::string& experiment = "");

/// 64-bit FNV-1a hash, hex-encoded.
std::string fnv1a_hex(const std::string& text);

} // namespace effdyn
