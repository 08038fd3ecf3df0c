#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "xai/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("xai_cli_" + std::to_string(::getpid()) + "_" + name + "_" +
                      std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Result {
  int code = -1;
  std::string err;
};

Result run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" XAI_CLI_PATH "\" " + args +
                          " > /dev/null 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Every regular file under `root` except the captured stderr.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "stderr.txt") {
      files[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
  }
  return files;
}

const char* kStepConfig = R"({
  "synth": {"generator": "step", "n_rows": 2000, "noise": 0.0},
  "seed": 11,
  "target": "y",
  "model": {"type": "gbm", "n_trees": 60, "learning_rate": 0.2, "max_depth": 2},
  "explain": {
    "vi": {"repeats": 3},
    "ice": {"sample": 50},
    "lime": {"rows": [0, 1], "samples": 1000},
    "shapley": {"rows": [0, 1], "background_rows": 100},
    "anchors": {"rows": [0, 1, 2, 3, 4]}
  }
})";

}  // namespace

TEST(Cli, UsageErrors) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run_cli("", dir).code, 1);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 1);
  EXPECT_EQ(run_cli("explain", dir).code, 1);
  EXPECT_EQ(run_cli("--help", dir).code, 0);
}

TEST(Cli, ExitCodesByCategory) {
  const auto dir = scratch("codes");
  const auto out = (dir / "run").string();
  EXPECT_EQ(run_cli("synth --generator nope -o " + out, dir).code, 2);
  EXPECT_EQ(run_cli("inspect --data " + (dir / "absent.csv").string() + " -o " + out, dir).code, 3);
  write(dir / "bad.json", "{ not json");
  EXPECT_EQ(run_cli("-c " + (dir / "bad.json").string() + " inspect -o " + out, dir).code, 2);
  write(dir / "unknown.json", R"({"colour": 1})");
  EXPECT_EQ(run_cli("-c " + (dir / "unknown.json").string() + " inspect -o " + out, dir).code, 2);
  write(dir / "ragged.csv", "a,b\n1,2\n3\n");
  EXPECT_EQ(run_cli("inspect --data " + (dir / "ragged.csv").string() + " -o " + out, dir).code, 3);
}

TEST(Cli, MissingArtifactNamesPriorCommand) {
  const auto dir = scratch("artifact");
  const auto out = (dir / "run").string();
  auto r = run_cli("explain vi -o " + out, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("xai train"), std::string::npos) << r.err;
  r = run_cli("train -o " + out, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("xai split"), std::string::npos) << r.err;
  r = run_cli("split -o " + out, dir);
  EXPECT_NE(r.err.find("xai impute"), std::string::npos) << r.err;
}

TEST(Cli, SynthIsDeterministicWithSidecar) {
  const auto dir = scratch("synth");
  for (const char* run : {"a", "b"}) {
    ASSERT_EQ(run_cli("synth --generator step --rows 500 --noise 0 --seed 4 -o " + (dir / run).string(), dir)
                  .code,
              0);
  }
  EXPECT_EQ(slurp(dir / "a/synth/data.csv"), slurp(dir / "b/synth/data.csv"));
  const auto truth = json::parse(slurp(dir / "a/synth/truth.json"));
  EXPECT_EQ(truth.at("generator"), "step");
  EXPECT_EQ(truth.at("active"), json::array({"x1"}));

  const auto t = xai::data::load_csv(dir / "a/synth/data.csv");
  EXPECT_EQ(t.n_rows(), 500u);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    EXPECT_EQ(t.column("y").value(r), t.column("x1").value(r) > 0.5 ? 1.0 : 0.0);
  }

  ASSERT_EQ(run_cli("synth --generator step --rows 500 --noise 0 --seed 5 -o " + (dir / "c").string(), dir)
                .code,
            0);
  EXPECT_NE(slurp(dir / "a/synth/data.csv"), slurp(dir / "c/synth/data.csv"));
}

TEST(Cli, CorrelatedPairHitsTargetCorrelation) {
  const auto dir = scratch("corr");
  ASSERT_EQ(run_cli("synth --generator correlated-pair --rows 10000 -o " + (dir / "r").string(), dir)
                .code,
            0);
  const auto t = xai::data::load_csv(dir / "r/synth/data.csv");
  EXPECT_NEAR(xai::oracles::pearson(t.column("x1").values(), t.column("x2").values()), 0.8, 0.05);
}

TEST(Cli, InspectReportsInjectedMissingness) {
  const auto dir = scratch("inspect");
  const auto out = (dir / "run").string();
  ASSERT_EQ(run_cli("synth --generator linear --rows 10000 --missing-fraction 0.1 -o " + out, dir)
                .code,
            0);
  // The synth section makes the synthetic table the input.
  write(dir / "cfg.json", R"({"synth": {"generator": "linear", "n_rows": 10000,
                              "missing_fraction": 0.1}})");
  ASSERT_EQ(run_cli("-c " + (dir / "cfg.json").string() + " inspect -o " + out, dir).code, 0);
  const auto report = json::parse(slurp(dir / "run/inspect/missingness.json"));
  for (const auto& c : report.at("columns")) {
    if (c.at("name") == "y") {
      EXPECT_EQ(c.at("missing"), 0);
    } else {
      EXPECT_NEAR(c.at("fraction").get<double>(), 0.10, 0.01) << c.dump();
    }
  }
  EXPECT_TRUE(fs::exists(dir / "run/inspect/patterns.csv"));
}

TEST(Cli, EmptyTableGivesZeroReport) {
  const auto dir = scratch("empty");
  write(dir / "empty.csv", "a,b\n");
  ASSERT_EQ(run_cli("inspect --data " + (dir / "empty.csv").string() + " -o " +
                    (dir / "run").string(),
                dir)
                .code,
            0);
  const auto report = json::parse(slurp(dir / "run/inspect/missingness.json"));
  EXPECT_EQ(report.at("n_rows"), 0);
  EXPECT_EQ(report.at("missing_cells"), 0);
}

TEST(Cli, OutputDirFromEnvironment) {
  const auto dir = scratch("env");
  const auto target = dir / "from_env";
  ASSERT_EQ(run_cli("synth --rows 50", dir, "XAI_OUTPUT_DIR=\"" + target.string() + "\"").code, 0);
  EXPECT_TRUE(fs::exists(target / "synth/data.csv"));
  EXPECT_TRUE(fs::exists(target / "manifest.json"));
}

TEST(Cli, PipelineOnStepSpec) {
  const auto dir = scratch("pipeline");
  write(dir / "step.json", kStepConfig);
  const std::string args = "-c " + (dir / "step.json").string() + " pipeline -o " +
                           (dir / "run").string();
  const auto first = run_cli(args, dir);
  ASSERT_EQ(first.code, 0) << first.err;

  const auto vi = json::parse(slurp(dir / "run/explain/vi/importance.json"));
  std::string top;
  for (const auto& f : vi.at("features")) {
    if (f.at("rank") == 1) top = f.at("feature");
  }
  EXPECT_EQ(top, "x1");

  // Anchors that reach tau sit on x1; an instance whose x1 quartile
  // straddles the step can only come back flagged unsatisfied.
  const auto anchors = json::parse(slurp(dir / "run/explain/anchors/anchors.json"));
  ASSERT_EQ(anchors.size(), 5u);
  std::size_t satisfied = 0;
  for (const auto& a : anchors) {
    if (!a.at("satisfied").get<bool>()) continue;
    ++satisfied;
    bool on_x1 = false;
    for (const auto& p : a.at("predicates")) on_x1 = on_x1 || p.at("feature") == "x1";
    EXPECT_TRUE(on_x1) << a.dump();
    EXPECT_GE(a.at("precision").get<double>(), 0.95) << a.dump();
  }
  EXPECT_GE(satisfied, 1u);

  for (const char* f : {"manifest.json", "synth/data.csv", "inspect/missingness.json",
                        "impute/data.csv", "split/train.csv", "split/test.csv",
                        "train/model.json", "explain/pdp/x1.csv", "explain/ice/x1.csv",
                        "explain/ale/x1.csv", "explain/ale2/x1__x2.csv", "explain/lime/lime.csv",
                        "explain/shapley/shapley.csv", "explain/anchors/anchors.csv",
                        "explain/vi/importance.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const auto manifest = json::parse(slurp(dir / "run/manifest.json"));
  const auto& train = manifest.at("stages").at("train");
  EXPECT_TRUE(train.at("inputs").contains("split/train.csv"));
  EXPECT_TRUE(train.at("outputs").contains("train/model.json"));
  EXPECT_TRUE(train.contains("wall_time_s"));

  // Identical rerun: every stage is skipped and no file changes.
  const auto before = snapshot(dir / "run");
  const auto second = run_cli(args, dir);
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_NE(second.err.find("explain.anchors: up to date"), std::string::npos) << second.err;
  EXPECT_EQ(second.err.find("wrote"), std::string::npos) << second.err;
  EXPECT_EQ(snapshot(dir / "run"), before);

  // A forced rerun rewrites everything with identical bytes; only the
  // manifest's timestamps move.
  ASSERT_EQ(run_cli(args + " --force", dir).code, 0);
  auto after = snapshot(dir / "run");
  ASSERT_EQ(after.size(), before.size());
  for (const auto& [name, bytes] : before) {
    if (name != "manifest.json") EXPECT_EQ(after[name], bytes) << name;
  }
}

TEST(Cli, ChangedSettingRerunsOnlyDownstream) {
  const auto dir = scratch("partial");
  write(dir / "step.json", kStepConfig);
  const std::string base = "-c " + (dir / "step.json").string() + " -o " + (dir / "run").string();
  ASSERT_EQ(run_cli(base + " pipeline", dir).code, 0);
  const auto r = run_cli(base + " --set explain.vi.repeats=4 pipeline", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("train: up to date"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("explain.vi: wrote"), std::string::npos) << r.err;
  const auto manifest = json::parse(slurp(dir / "run/manifest.json"));
  EXPECT_EQ(manifest.at("stages").at("explain.vi").at("config").at("repeats"), 4);
}

TEST(Cli, InputsAreNotModified) {
  const auto dir = scratch("inputs");
  ASSERT_EQ(run_cli("synth --generator linear --rows 400 --missing-fraction 0.05 -o " +
                    (dir / "gen").string(),
                dir)
                .code,
            0);
  const auto data = dir / "gen/synth/data.csv";
  const std::string original = slurp(data);
  const std::string args = "--data " + data.string() + " -o " + (dir / "run").string();
  for (const char* cmd : {"inspect", "impute --strategy predictive", "split", "train"}) {
    const auto r = run_cli(args + " " + cmd, dir);
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
  }
  EXPECT_EQ(slurp(data), original);
  const auto imputed = xai::data::load_csv(dir / "run/impute/data.csv");
  for (const auto& c : imputed.columns()) EXPECT_EQ(c.missing_count(), 0u) << c.name();
}

TEST(Cli, OnePointGridTuneMatchesTrain) {
  const auto dir = scratch("tune");
  write(dir / "cfg.json", R"({
    "synth": {"generator": "linear", "n_rows": 300},
    "model": {"type": "gbm", "n_trees": 20, "max_depth": 2},
    "tune": {"k_folds": 3},
    "explain": {"methods": []}
  })");
  const auto r = run_cli("-c " + (dir / "cfg.json").string() + " pipeline -o " +
                         (dir / "run").string(),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "run/tune/model.json"), slurp(dir / "run/train/model.json"));
  const auto results = slurp(dir / "run/tune/results.csv");
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 2);
}

TEST(Cli, TuneWorkerCountDoesNotChangeResults) {
  const auto dir = scratch("workers");
  write(dir / "cfg.json", R"({
    "synth": {"generator": "interaction", "n_rows": 400},
    "model": {"n_trees": 10},
    "tune": {"learning_rate": [0.1, 0.3], "max_depth": [1, 2], "k_folds": 3},
    "explain": {"methods": []}
  })");
  for (const char* w : {"1", "4"}) {
    const auto r = run_cli("-c " + (dir / "cfg.json").string() + " --workers " + w +
                           " pipeline -o " + (dir / w).string(),
                       dir);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir / "1/tune/results.csv"), slurp(dir / "4/tune/results.csv"));
  EXPECT_EQ(slurp(dir / "1/tune/model.json"), slurp(dir / "4/tune/model.json"));
}

TEST(Cli, FairnessOnNoiseGroup) {
  const auto dir = scratch("fair");
  write(dir / "cfg.json", R"({
    "synth": {"generator": "noise-group", "n_rows": 3000, "noise": 0.0},
    "model": {"type": "gbm", "n_trees": 40, "loss": "logistic"},
    "features": ["x1", "x2"],
    "explain": {"methods": ["vi"]},
    "fairness": {"group": "group"}
  })");
  const auto r = run_cli("-c " + (dir / "cfg.json").string() + " pipeline -o " +
                         (dir / "run").string(),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(slurp(dir / "run/fairness/report.json"));
  std::map<std::string, double> auc;
  for (const auto& g : report.at("groups")) auc[g.at("level")] = g.at("auc").get<double>();
  ASSERT_EQ(auc.size(), 3u);
  EXPECT_GT(auc["A"], 0.95);
  EXPECT_GT(auc["B"], 0.95);
  EXPECT_NEAR(auc["C"], 0.5, 0.1);
  EXPECT_TRUE(fs::exists(dir / "run/fairness/roc.csv"));
  EXPECT_TRUE(fs::exists(dir / "run/fairness/groups.csv"));

  // A numeric grouping column is rejected as a config error.
  EXPECT_EQ(run_cli("-c " + (dir / "cfg.json").string() + " fairness --group x1 -o " +
                    (dir / "run").string(),
                dir)
                .code,
            2);
}

TEST(Cli, ExplainSubcommandFlags) {
  const auto dir = scratch("flags");
  write(dir / "step.json", kStepConfig);
  const std::string base = "-c " + (dir / "step.json").string() + " -o " + (dir / "run").string();
  ASSERT_EQ(run_cli(base + " pipeline --set explain.methods=[]", dir).code, 0);
  ASSERT_EQ(run_cli(base + " explain pdp --features x2", dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "run/explain/pdp/x2.csv"));
  EXPECT_FALSE(fs::exists(dir / "run/explain/pdp/x1.csv"));
  ASSERT_EQ(run_cli(base + " explain shapley --rows 3", dir).code, 0);
  const auto shap = json::parse(slurp(dir / "run/explain/shapley/shapley.json"));
  ASSERT_EQ(shap.size(), 1u);
  EXPECT_EQ(shap[0].at("instance"), 3);
  EXPECT_EQ(run_cli(base + " explain lime --rows 100000", dir).code, 2);
  EXPECT_EQ(run_cli(base + " explain pdp --features nope", dir).code, 3);
}

TEST(Cli, TomlConfigMatchesJson) {
  const auto dir = scratch("toml");
  write(dir / "cfg.json", R"({
    "synth": {"generator": "interaction", "n_rows": 300, "seed": 4},
    "seed": 5,
    "model": {"n_trees": 10},
    "tune": {"max_depth": [2, 1], "learning_rate": [0.3, 0.1], "k_folds": 3},
    "explain": {"methods": ["pdp"], "pdp": {"grid_size": 5}}
  })");
  write(dir / "cfg.toml", R"(seed = 5

[synth]
generator = "interaction"
n_rows = 300
seed = 4

[model]
n_trees = 10

[tune]
max_depth = [2, 1]
learning_rate = [0.3, 0.1]
k_folds = 3

[explain]
methods = ["pdp"]
pdp = { grid_size = 5 }
)");
  for (const char* ext : {"json", "toml"}) {
    const auto r = run_cli("-c " + (dir / (std::string("cfg.") + ext)).string() +
                               " pipeline -o " + (dir / ext).string(),
                           dir);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  auto a = snapshot(dir / "json");
  auto b = snapshot(dir / "toml");
  for (const char* name : {"manifest.json", "tune/timings.csv"}) {
    a.erase(name);
    b.erase(name);
  }
  EXPECT_EQ(a, b);
  // Axes keep document order: max_depth varies slowest.
  const auto results = slurp(dir / "toml/tune/results.csv");
  const auto first = results.find('\n') + 1;
  EXPECT_EQ(results.substr(first, results.find('\n', first) - first).substr(0, 11),
            "0,10,0.3,2,");
}

TEST(Cli, InvalidTomlIsConfigError) {
  const auto dir = scratch("badtoml");
  write(dir / "bad.toml", "[synth\ngenerator = 1\n");
  const auto r = run_cli("-c " + (dir / "bad.toml").string() + " inspect -o " +
                             (dir / "run").string(),
                         dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not valid TOML"), std::string::npos) << r.err;
}

TEST(Cli, RerunRemovesStaleOutputs) {
  const auto dir = scratch("stale");
  const auto out = (dir / "run").string();
  ASSERT_EQ(run_cli("synth --generator linear --rows 200 -o " + out, dir).code, 0);
  for (const char* stage : {"inspect", "impute", "split", "train"}) {
    ASSERT_EQ(run_cli(std::string(stage) + " -o " + out, dir).code, 0);
  }
  ASSERT_EQ(run_cli("explain pdp --features x1,x2 -o " + out, dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "run/explain/pdp/x2.csv"));
  ASSERT_EQ(run_cli("explain pdp --features x1 -o " + out, dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "run/explain/pdp/x1.csv"));
  EXPECT_FALSE(fs::exists(dir / "run/explain/pdp/x2.csv"));
  EXPECT_FALSE(fs::exists(dir / "run/explain/pdp/x2.svg"));
}
