#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tel {

enum class ConfigType { string, integer, real, boolean, int_list, real_list };

struct ConfigKey {
  std::string name;
  ConfigType type;
  std::string help;
  bool hashed = true;  ///< part of the input hash; execution controls are not
};

/// Every key an experiment config may contain.
const std::vector<ConfigKey>& config_schema();
const std::vector<std::string>& command_names();

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  [[nodiscard]] const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Flat key/value experiment description. Values are kept as JSON scalars or
/// arrays so that parse → serialize → parse is the identity.
class ExperimentConfig {
 public:
  ExperimentConfig() = default;

  /// `key = value` lines, `#` comments, values in TOML basic syntax (quoted
  /// strings, numbers, true/false, flat arrays). Collects every problem.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Set from a command-line string, converted according to the schema type.
  /// Lists are comma separated, with or without brackets.
  void set_from_text(const std::string& key, const std::string& text);
  void set(const std::string& key, nlohmann::json value) { values_[key] = std::move(value); }
  /// Copy every key of `overrides` over this config.
  void merge(const ExperimentConfig& overrides);

  [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
  [[nodiscard]] const nlohmann::json& at(const std::string& key) const { return values_.at(key); }
  template <class T>
  [[nodiscard]] T get_or(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second.get<T>();
  }

  /// Sorted `key = value` lines.
  [[nodiscard]] std::string serialize() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Every violation of types, ranges and per-command requirements.
  [[nodiscard]] std::vector<std::string> problems() const;
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

 private:
  std::map<std::string, nlohmann::json> values_;
};

/// SHA-1 over a git blob header and the canonical input text (hashed keys,
/// plus the content of a referenced graph file).
std::string input_hash(const ExperimentConfig& config);

struct RunOptions {
  std::optional<std::filesystem::path> cache_dir;  ///< unset: no caching
  bool force = false;
  int threads = 1;
};

/// TEL_CACHE_DIR, else $XDG_CACHE_HOME/tel, else ~/.cache/tel.
std::filesystem::path default_cache_dir();

/// Validated config in, record out:
/// {schema, command, config, input_hash, outputs, diagnostics, timestamp}.
/// Only `diagnostics` and `timestamp` may differ between runs of one config.
nlohmann::json run(const ExperimentConfig& config, const RunOptions& options = {});

class NoPlotData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV text for records that carry a curve or sequence; throws NoPlotData for
/// scalar results.
std::string emit_plotdata(const nlohmann::json& record);

/// Write through a temporary file in the same directory and rename.
void write_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace tel
