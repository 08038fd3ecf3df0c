#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/error.hpp"

namespace xai::cli {

using Json = nlohmann::ordered_json;

/// Pipeline configuration: a TOML or JSON document whose top-level keys are
///   data, synth, target, features, column_kinds, seed, workers,
///   output_dir, impute, split, model, tune, explain, fairness.
/// Command-line flags are applied on top with set().
class Config {
 public:
  Config() : doc_(Json::object()) {}
  explicit Config(Json doc);

  // TOML for a .toml extension, JSON otherwise.
  static Config load(const std::filesystem::path& path);

  // Dotted path, e.g. "model.max_depth"; intermediate objects are created.
  void set(std::string_view key, Json value);
  // KEY=VALUE where VALUE is parsed as JSON, falling back to a string.
  void set_assignment(std::string_view assignment);

  const Json& doc() const noexcept { return doc_; }
  bool has(std::string_view key) const { return doc_.contains(std::string(key)); }
  // Object at `key`, or an empty object.
  Json section(std::string_view key) const;

 private:
  Json doc_;
};

// Typed lookup in a config object; type mismatches become ConfigError
// naming `where`.
template <typename T>
T get_or(const Json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("'" + where + "." + key + "' has the wrong type (" +
                      obj.at(key).dump() + ")");
  }
}

template <typename T>
std::optional<T> get_opt(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_or<T>(obj, key, T{}, where);
}

// TOML document as JSON, tables in document order.
Json parse_toml(std::string_view text, const std::string& source);

// Rejects keys outside `allowed`.
void check_keys(const Json& obj, const std::vector<std::string>& allowed,
                const std::string& where);

}  // namespace xai::cli
