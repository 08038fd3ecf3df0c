#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "xai/error.hpp"

namespace fs = std::filesystem;
using namespace xai;
using namespace xai::cli;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kCompute = 4 };

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return kConfig;
    case ErrorCategory::data: return kData;
    case ErrorCategory::computation: return kCompute;
  }
  return kCompute;
}

struct Flags {
  std::string config;
  std::string out;
  std::string data;
  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> set;
  bool force = false;
  bool quiet = false;

  // synth
  std::string generator;
  std::optional<std::size_t> rows;
  std::optional<double> noise;
  std::optional<double> missing_fraction;
  // impute / split / train / fairness
  std::string strategy;
  std::optional<double> train_fraction;
  std::string stratify;
  std::string model;
  std::string group;
  std::optional<double> threshold;
  // explain
  std::vector<std::string> features;
  std::vector<std::size_t> instance_rows;
};

// Relative paths in a config file resolve against the file's directory.
void anchor_paths(Config& config, const fs::path& base) {
  for (const char* key : {"data", "output_dir"}) {
    if (!config.has(key) || !config.doc().at(key).is_string()) continue;
    const fs::path p = config.doc().at(key).get<std::string>();
    if (p.is_relative()) config.set(key, (base / p).lexically_normal().string());
  }
}

Session make_session(const Flags& f, const std::string& method) {
  Session s;
  if (!f.config.empty()) {
    s.config = Config::load(f.config);
    anchor_paths(s.config, fs::absolute(f.config).parent_path());
  }
  auto& c = s.config;
  if (!f.data.empty()) c.set("data", f.data);
  if (!f.target.empty()) c.set("target", f.target);
  if (f.seed) c.set("seed", *f.seed);
  if (f.workers) c.set("workers", *f.workers);
  if (!f.generator.empty()) c.set("synth.generator", f.generator);
  if (f.rows) c.set("synth.n_rows", *f.rows);
  if (f.noise) c.set("synth.noise", *f.noise);
  if (f.missing_fraction) c.set("synth.missing_fraction", *f.missing_fraction);
  if (!f.strategy.empty()) c.set("impute.strategy", f.strategy);
  if (f.train_fraction) c.set("split.train_fraction", *f.train_fraction);
  if (!f.stratify.empty()) c.set("split.stratify", f.stratify);
  if (!f.model.empty()) c.set("model.type", f.model);
  if (!f.group.empty()) c.set("fairness.group", f.group);
  if (f.threshold) c.set("fairness.threshold", *f.threshold);
  if (!method.empty()) {
    if (!f.features.empty()) {
      if (method == "ale2") {
        if (f.features.size() != 2) throw ConfigError("ale2 --features takes two names");
        c.set("explain.ale2.pairs", Json::array({f.features}));
      } else if (method != "vi") {
        c.set("explain." + method + ".features", f.features);
      }
    }
    if (!f.instance_rows.empty()) c.set("explain." + method + ".rows", f.instance_rows);
  }
  for (const auto& a : f.set) c.set_assignment(a);

  if (!f.out.empty()) {
    s.run_dir = f.out;
  } else if (c.has("output_dir")) {
    s.run_dir = get_or<std::string>(c.doc(), "output_dir", "", "config");
  } else if (const char* env = std::getenv("XAI_OUTPUT_DIR"); env && *env) {
    s.run_dir = env;
  } else {
    s.run_dir = "xai-run";
  }
  s.force = f.force;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xai: model-agnostic explanations for tabular models"};
  app.set_version_flag("--version", XAI_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("-c,--config", f.config, "Pipeline config (.toml or .json)");
  app.add_option("-o,--out", f.out, "Run directory (default: $XAI_OUTPUT_DIR or ./xai-run)");
  app.add_option("--data", f.data, "Input CSV");
  app.add_option("--target", f.target, "Target column");
  app.add_option("--seed", f.seed, "Global seed");
  app.add_option("--workers", f.workers, "Worker threads (0 = all cores)");
  app.add_option("--set", f.set, "Config override KEY=VALUE (dotted key, JSON value)");
  app.add_flag("--force", f.force, "Recompute stages even when up to date");
  app.add_flag("-q,--quiet", f.quiet, "No progress messages");

  std::string command;
  std::string method;
  auto pick = [&](CLI::App* sub, std::string name) {
    sub->callback([&command, name] { command = name; });
    return sub;
  };

  auto* synth = pick(app.add_subcommand("synth", "Generate a synthetic dataset"), "synth");
  synth->add_option("--generator", f.generator,
                    "linear, step, interaction, correlated-pair or noise-group");
  synth->add_option("--rows", f.rows, "Row count");
  synth->add_option("--noise", f.noise, "Noise level");
  synth->add_option("--missing-fraction", f.missing_fraction, "Injected missing fraction");

  pick(app.add_subcommand("inspect", "Missing-value report"), "inspect");
  auto* impute = pick(app.add_subcommand("impute", "Fill missing values"), "impute");
  impute->add_option("--strategy", f.strategy, "median_mode or predictive");
  auto* split = pick(app.add_subcommand("split", "Train/test split"), "split");
  split->add_option("--train-fraction", f.train_fraction, "Share of rows for training");
  split->add_option("--stratify", f.stratify, "Column to stratify on");
  auto* train = pick(app.add_subcommand("train", "Fit the configured model"), "train");
  train->add_option("--model", f.model, "gbm, glm or tree");
  pick(app.add_subcommand("tune", "Cross-validated grid search"), "tune");

  auto* explain = pick(app.add_subcommand("explain", "Run one explanation method"), "explain");
  explain->require_subcommand(1);
  for (const auto& m : explain_methods()) {
    auto* sub = explain->add_subcommand(m, "Explanation method " + m);
    sub->callback([&method, m] { method = m; });
    sub->add_option("--features", f.features, "Features to explain")->delimiter(',');
    sub->add_option("--rows", f.instance_rows, "Test-set rows to explain")->delimiter(',');
  }

  auto* fair = pick(app.add_subcommand("fairness", "Per-group fairness metrics"), "fairness");
  fair->add_option("--group", f.group, "Categorical column defining groups");
  fair->add_option("--threshold", f.threshold, "Positive-class threshold");
  pick(app.add_subcommand("pipeline", "Run every configured stage"), "pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Session s = make_session(f, method);
    std::ostream null_stream(nullptr);
    s.log = f.quiet ? &null_stream : &std::cerr;
    if (command == "synth") cmd_synth(s);
    else if (command == "inspect") cmd_inspect(s);
    else if (command == "impute") cmd_impute(s);
    else if (command == "split") cmd_split(s);
    else if (command == "train") cmd_train(s);
    else if (command == "tune") cmd_tune(s);
    else if (command == "explain") cmd_explain(s, method);
    else if (command == "fairness") cmd_fairness(s);
    else if (command == "pipeline") cmd_pipeline(s);
    if (!f.quiet) std::cerr << "run directory: " << s.run_dir.string() << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCompute;
  }
}
