#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace xai::cli {

struct Session {
  Config config;
  std::filesystem::path run_dir;
  bool force = false;
  std::ostream* log = nullptr;
};

// Explanation methods in pipeline order.
const std::vector<std::string>& explain_methods();

void cmd_synth(const Session& s);
void cmd_inspect(const Session& s);
void cmd_impute(const Session& s);
void cmd_split(const Session& s);
void cmd_train(const Session& s);
void cmd_tune(const Session& s);
void cmd_explain(const Session& s, const std::string& method);
void cmd_fairness(const Session& s);
void cmd_pipeline(const Session& s);

}  // namespace xai::cli
