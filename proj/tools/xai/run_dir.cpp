#include "run_dir.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

#include "xai/error.hpp"

namespace fs = std::filesystem;

namespace xai::cli {
namespace {

constexpr const char* kManifest = "manifest.json";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string file_hash(const fs::path& path) { return hex(fnv1a(read_file(path))); }

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

void StageOutputs::write(const std::string& relative, std::string_view content) {
  write_file(run_dir_ / relative, content);
  files_.push_back(relative);
}

void StageOutputs::write(const std::string& relative,
                         const std::function<void(std::ostream&)>& emit) {
  std::ostringstream buf;
  emit(buf);
  write(relative, buf.str());
}

void StageOutputs::write_json(const std::string& relative,
                              const nlohmann::ordered_json& j) {
  write(relative, j.dump(2) + "\n");
}

RunDir::RunDir(fs::path root, std::ostream& log, bool force)
    : root_(std::move(root)), log_(log), force_(force) {
  fs::create_directories(root_);
}

fs::path RunDir::require(const std::string& relative, const std::string& command) const {
  fs::path p = root_ / relative;
  if (!fs::exists(p)) {
    throw ConfigError("missing artifact '" + p.string() + "': run `xai " + command +
                      "` first");
  }
  return p;
}

std::string RunDir::fingerprint(const StageRequest& request,
                                nlohmann::ordered_json& inputs) const {
  std::uint64_t h = fnv1a(request.name);
  h = fnv1a(request.config.dump(), h);
  for (const auto& input : request.inputs) {
    const std::string digest = file_hash(input);
    fs::path shown = input.lexically_proximate(root_);
    if (shown.empty() || *shown.begin() == "..") shown = input;
    inputs[shown.generic_string()] = digest;
    h = fnv1a(shown.generic_string(), h);
    h = fnv1a(digest, h);
  }
  h = fnv1a(XAI_VERSION, h);
  return hex(h);
}

bool RunDir::up_to_date(const nlohmann::ordered_json& entry,
                        const std::string& fingerprint) const {
  if (!entry.is_object() || entry.value("fingerprint", "") != fingerprint) return false;
  if (!entry.contains("outputs")) return false;
  for (const auto& [relative, digest] : entry.at("outputs").items()) {
    const fs::path p = root_ / relative;
    if (!fs::exists(p) || file_hash(p) != digest.get<std::string>()) return false;
  }
  return true;
}

nlohmann::ordered_json RunDir::load_manifest() const {
  const fs::path p = root_ / kManifest;
  if (!fs::exists(p)) {
    return {{"tool", "xai"}, {"version", XAI_VERSION}, {"stages", nlohmann::ordered_json::object()}};
  }
  try {
    auto j = nlohmann::ordered_json::parse(read_file(p));
    if (!j.contains("stages") || !j.at("stages").is_object()) {
      throw DataError("manifest '" + p.string() + "' has no stages object");
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt manifest '" + p.string() + "': " + e.what());
  }
}

void RunDir::save_manifest(const nlohmann::ordered_json& manifest) const {
  write_file(root_ / kManifest, manifest.dump(2) + "\n");
}

bool RunDir::run(const StageRequest& request,
                 const std::function<void(StageOutputs&)>& body) {
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  const std::string fp = fingerprint(request, inputs);
  auto manifest = load_manifest();
  auto& stages = manifest["stages"];
  if (!force_ && stages.contains(request.name) && up_to_date(stages[request.name], fp)) {
    log_ << request.name << ": up to date\n";
    return false;
  }

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  StageOutputs outputs(root_);
  body(outputs);
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - t0;

  nlohmann::ordered_json produced = nlohmann::ordered_json::object();
  for (const auto& f : outputs.files()) produced[f] = file_hash(root_ / f);
  // Files from the previous run of this stage that were not rewritten.
  if (stages.contains(request.name) && stages[request.name].contains("outputs")) {
    for (const auto& [rel, _] : stages[request.name]["outputs"].items()) {
      if (!produced.contains(rel)) fs::remove(root_ / rel);
    }
  }
  nlohmann::ordered_json entry;
  entry["fingerprint"] = fp;
  entry["version"] = XAI_VERSION;
  entry["config"] = request.config;
  entry["inputs"] = inputs;
  entry["outputs"] = produced;
  entry["started_at"] = started;
  entry["wall_time_s"] = wall.count();

  // Reload in case the body ran nested stages.
  manifest = load_manifest();
  manifest["version"] = XAI_VERSION;
  manifest["stages"][request.name] = entry;
  save_manifest(manifest);
  log_ << request.name << ": wrote " << produced.size() << " file(s)\n";
  return true;
}

}  // namespace xai::cli
