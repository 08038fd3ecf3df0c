#include "config.hpp"

#include <algorithm>
#include <sstream>

#include <toml.hpp>

#include "run_dir.hpp"

namespace xai::cli {

namespace {

const std::vector<std::string> kTopLevel{
    "data",       "synth",  "target", "features", "column_kinds",
    "seed",       "workers", "output_dir", "impute", "split",
    "model",      "tune",   "explain", "fairness"};

Json from_toml(const toml::node& node);

// Table keys come back sorted; restore document order from source positions.
Json from_toml_table(const toml::table& table) {
  std::vector<std::pair<std::string_view, const toml::node*>> entries;
  for (const auto& [key, value] : table) entries.emplace_back(key.str(), &value);
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    const auto pa = a.second->source().begin;
    const auto pb = b.second->source().begin;
    return pa.line != pb.line ? pa.line < pb.line : pa.column < pb.column;
  });
  Json out = Json::object();
  for (const auto& [key, value] : entries) out[std::string(key)] = from_toml(*value);
  return out;
}

Json from_toml(const toml::node& node) {
  if (const auto* t = node.as_table()) return from_toml_table(*t);
  if (const auto* a = node.as_array()) {
    Json out = Json::array();
    for (const auto& v : *a) out.push_back(from_toml(v));
    return out;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  std::ostringstream text;
  node.visit([&](const auto& n) { text << n; });
  return text.str();
}

}  // namespace

Json parse_toml(std::string_view text, const std::string& source) {
  try {
    return from_toml_table(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    const auto pos = e.source().begin;
    throw ConfigError("config '" + source + "' is not valid TOML (line " +
                      std::to_string(pos.line) + ", column " + std::to_string(pos.column) +
                      "): " + std::string(e.description()));
  }
}

void check_keys(const Json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

Config::Config(Json doc) : doc_(std::move(doc)) {
  check_keys(doc_, kTopLevel, "config");
}

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file '" + path.string() + "' does not exist");
  }
  if (path.extension() == ".toml") return Config(parse_toml(read_file(path), path.string()));
  try {
    return Config(Json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void Config::set(std::string_view key, Json value) {
  Json* node = &doc_;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part(key.substr(start, dot - start));
    if (part.empty()) throw ConfigError("bad config key '" + std::string(key) + "'");
    if (start == 0 &&
        std::find(kTopLevel.begin(), kTopLevel.end(), part) == kTopLevel.end()) {
      throw ConfigError("unknown key '" + part + "' in config");
    }
    if (dot == std::string_view::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    Json& next = (*node)[part];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) {
      throw ConfigError("config key '" + std::string(key.substr(0, dot)) +
                        "' is not an object");
    }
    node = &next;
    start = dot + 1;
  }
}

void Config::set_assignment(std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("expected KEY=VALUE, got '" + std::string(assignment) + "'");
  }
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set(assignment.substr(0, eq), std::move(value));
}

Json Config::section(std::string_view key) const {
  const std::string k(key);
  if (!doc_.contains(k) || doc_.at(k).is_null()) return Json::object();
  if (!doc_.at(k).is_object()) throw ConfigError("'" + k + "' must be an object");
  return doc_.at(k);
}

}  // namespace xai::cli
