#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xai::cli {

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex(std::uint64_t value);
// Hash of a file's bytes; throws DataError when it cannot be read.
std::string file_hash(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes through a temporary file and a rename so readers never see a
// partial artifact.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Collects a stage's outputs, all relative to the run directory.
class StageOutputs {
 public:
  explicit StageOutputs(std::filesystem::path run_dir) : run_dir_(std::move(run_dir)) {}

  void write(const std::string& relative, std::string_view content);
  // Streams into a buffer that is written on return.
  void write(const std::string& relative,
             const std::function<void(std::ostream&)>& emit);
  void write_json(const std::string& relative, const nlohmann::ordered_json& j);

  const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  std::filesystem::path run_dir_;
  std::vector<std::string> files_;
};

struct StageRequest {
  std::string name;
  nlohmann::ordered_json config;  // stage-relevant settings, seeds included
  std::vector<std::filesystem::path> inputs;
};

/// Run directory with a manifest.json recording, per stage, the inputs and
/// their hashes, the settings, the outputs and their hashes, the tool
/// version and the wall time. A stage whose settings and input hashes match
/// the manifest and whose outputs are unchanged on disk is skipped.
class RunDir {
 public:
  RunDir(std::filesystem::path root, std::ostream& log, bool force);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path(const std::string& relative) const { return root_ / relative; }

  // Path of an artifact produced by `command`; throws ConfigError naming
  // the command when it does not exist yet.
  std::filesystem::path require(const std::string& relative,
                                const std::string& command) const;

  // Returns false when the stage was up to date.
  bool run(const StageRequest& request,
           const std::function<void(StageOutputs&)>& body);

 private:
  std::string fingerprint(const StageRequest& request,
                          nlohmann::ordered_json& inputs) const;
  bool up_to_date(const nlohmann::ordered_json& entry,
                  const std::string& fingerprint) const;
  nlohmann::ordered_json load_manifest() const;
  void save_manifest(const nlohmann::ordered_json& manifest) const;

  std::filesystem::path root_;
  std::ostream& log_;
  bool force_;
};

}  // namespace xai::cli
