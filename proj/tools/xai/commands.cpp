#include "commands.hpp"

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <thread>

#include "run_dir.hpp"
#include "xai/dataset.hpp"
#include "xai/explain_global.hpp"
#include "xai/explain_local.hpp"
#include "xai/fairness.hpp"
#include "xai/format.hpp"
#include "xai/models.hpp"
#include "xai/random.hpp"
#include "xai/svg.hpp"
#include "xai/synth.hpp"
#include "xai/tuning.hpp"

namespace fs = std::filesystem;

namespace xai::cli {
namespace {

// Seed streams per stage, all derived from the global seed.
enum Stream : std::uint64_t {
  kImpute = 1,
  kSplit = 2,
  kTrain = 3,
  kTune = 4,
  kImportance = 5,
  kIce = 6,
  kLime = 7,
  kShapley = 8,
  kAnchors = 9,
  kBackground = 10,
};

constexpr const char* kSynthData = "synth/data.csv";
constexpr const char* kImputed = "impute/data.csv";
constexpr const char* kTrainCsv = "split/train.csv";
constexpr const char* kTestCsv = "split/test.csv";

std::uint64_t global_seed(const Session& s) {
  return get_or<std::uint64_t>(s.config.doc(), "seed", 0, "config");
}

std::size_t workers(const Session& s) {
  const auto w = get_or<std::size_t>(s.config.doc(), "workers", 1, "config");
  return w == 0 ? std::max(1u, std::thread::hardware_concurrency()) : w;
}

std::string target(const Session& s) {
  return get_or<std::string>(s.config.doc(), "target", "y", "config");
}

std::vector<std::string> features(const Session& s) {
  return get_or<std::vector<std::string>>(s.config.doc(), "features", {}, "config");
}

Json column_kinds_json(const Session& s) { return s.config.section("column_kinds"); }

data::CsvOptions csv_options(const Session& s) {
  data::CsvOptions options;
  const Json kinds = column_kinds_json(s);
  for (const auto& [name, kind] : kinds.items()) {
    const auto k = kind.is_string() ? kind.get<std::string>() : std::string();
    if (k == "numeric") {
      options.kinds[name] = ColumnKind::numeric;
    } else if (k == "categorical") {
      options.kinds[name] = ColumnKind::categorical;
    } else {
      throw ConfigError("column_kinds." + name + " must be \"numeric\" or \"categorical\"");
    }
  }
  return options;
}

data::Table load(const Session& s, const fs::path& path) {
  return data::load_csv(path, csv_options(s));
}

RunDir open_run(const Session& s) { return RunDir(s.run_dir, *s.log, s.force); }

fs::path source_data(const Session& s, const RunDir& run) {
  if (s.config.has("data")) {
    const auto path = get_or<std::string>(s.config.doc(), "data", "", "config");
    if (!fs::exists(path)) throw DataError("data file '" + path + "' does not exist");
    return path;
  }
  if (s.config.has("synth") || fs::exists(s.run_dir / kSynthData)) {
    return run.require(kSynthData, "synth");
  }
  throw ConfigError("no input data: set \"data\" (or \"synth\") in the config, pass --data "
                    "or run `xai synth` first");
}

std::string slug(std::string name) {
  for (char& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return name;
}

// --- model construction ------------------------------------------------------

struct ModelSpec {
  std::string type;
  Json params;  // type-specific fields
};

ModelSpec model_spec(const Session& s) {
  Json m = s.config.section("model");
  ModelSpec spec;
  spec.type = get_or<std::string>(m, "type", "gbm", "model");
  m.erase("type");
  if (spec.type == "gbm") {
    check_keys(m, {"n_trees", "learning_rate", "max_depth", "min_node_size", "col_sample",
                   "row_subsample", "loss", "seed"},
               "model");
    if (!m.contains("seed")) m["seed"] = derive_seed(global_seed(s), kTrain);
  } else if (spec.type == "glm") {
    check_keys(m, {"family", "l2", "max_iter", "tol"}, "model");
  } else if (spec.type == "tree") {
    check_keys(m, {"max_depth", "min_node_size"}, "model");
  } else {
    throw ConfigError("unknown model type '" + spec.type + "' (expected gbm, glm or tree)");
  }
  spec.params = m;
  return spec;
}

models::GbmParams gbm_params(const ModelSpec& spec) {
  return models::gbm_params_from_json(nlohmann::json(spec.params));
}

std::unique_ptr<models::Predictor> fit(const ModelSpec& spec, const data::Table& train,
                                       const std::string& target,
                                       const std::vector<std::string>& features) {
  if (!train.find(target)) throw SchemaError("target column '" + target + "' not found");
  if (spec.type == "gbm") {
    return std::make_unique<models::GbmModel>(
        models::train_gbm(train, target, gbm_params(spec), features));
  }
  if (spec.type == "glm") {
    models::GlmOptions options;
    const auto family = get_or<std::string>(spec.params, "family", "linear", "model");
    if (family == "logistic") {
      options.family = models::GlmFamily::logistic;
    } else if (family != "linear") {
      throw ConfigError("model.family must be linear or logistic");
    }
    options.l2 = get_or<double>(spec.params, "l2", options.l2, "model");
    options.max_iter = get_or<std::size_t>(spec.params, "max_iter", options.max_iter, "model");
    options.tol = get_or<double>(spec.params, "tol", options.tol, "model");
    options.features = features;
    return std::make_unique<models::GlmModel>(models::train_glm(train, target, options));
  }
  models::TreeParams params;
  params.max_depth = get_or<std::size_t>(spec.params, "max_depth", params.max_depth, "model");
  params.min_node_size =
      get_or<std::size_t>(spec.params, "min_node_size", params.min_node_size, "model");
  params.features = features;
  return std::make_unique<models::TreeModel>(models::train_tree(train, target, params));
}

std::string model_json(const models::Predictor& model) { return model.to_json().dump(2) + "\n"; }

Json fit_metrics(const models::Predictor& model, const data::Table& train,
                 const data::Table& test, const std::string& target) {
  Json m;
  m["model"] = model.type_name();
  m["n_train"] = train.n_rows();
  m["n_test"] = test.n_rows();
  m["train_rmse"] = models::rmse(model.predict(train), models::target_values(train, target));
  if (test.n_rows() > 0) {
    m["test_rmse"] = models::rmse(model.predict(test), models::target_values(test, target));
  }
  return m;
}

// --- explanation helpers -------------------------------------------------------

Json explain_section(const Session& s) {
  const Json e = s.config.section("explain");
  std::vector<std::string> allowed{"model", "methods"};
  for (const auto& m : explain_methods()) allowed.push_back(m);
  check_keys(e, allowed, "explain");
  return e;
}

std::string model_source(const Session& s) {
  const Json e = explain_section(s);
  const auto source = get_or<std::string>(e, "model", s.config.has("tune") ? "tune" : "train",
                                          "explain");
  if (source != "train" && source != "tune") {
    throw ConfigError("explain.model must be train or tune");
  }
  return source;
}

Json method_section(const Session& s, const std::string& method,
                    const std::vector<std::string>& allowed) {
  const Json e = explain_section(s);
  Json m = e.contains(method) && !e.at(method).is_null() ? e.at(method) : Json::object();
  check_keys(m, allowed, "explain." + method);
  return m;
}

std::vector<std::string> chosen_features(const Json& section, const std::string& where,
                                         const models::Schema& schema, bool numeric_only) {
  auto names = get_or<std::vector<std::string>>(section, "features", {}, where);
  if (names.empty()) {
    for (const auto& f : schema.features()) {
      if (!numeric_only || f.kind == ColumnKind::numeric) names.push_back(f.name);
    }
  }
  for (const auto& n : names) schema.index_of(n);
  return names;
}

std::vector<std::size_t> chosen_rows(const Json& section, const std::string& where,
                                     std::size_t available) {
  auto rows = get_or<std::vector<std::size_t>>(section, "rows", {}, where);
  if (rows.empty()) {
    for (std::size_t r = 0; r < std::min<std::size_t>(3, available); ++r) rows.push_back(r);
  }
  for (std::size_t r : rows) {
    if (r >= available) {
      throw ConfigError(where + ".rows: row " + std::to_string(r) + " is out of range (" +
                        std::to_string(available) + " test rows)");
    }
  }
  return rows;
}

data::Table subsample(const data::Table& t, std::size_t max_rows, std::uint64_t seed) {
  if (max_rows == 0 || t.n_rows() <= max_rows) return t;
  std::vector<std::size_t> idx(t.n_rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  return t.select_rows(idx);
}

void profile_svg(std::ostream& out, const explain::Profile& p, std::size_t max_curves) {
  std::vector<svg::Series> series;
  const std::size_t n = std::min(max_curves, p.curves.size());
  for (std::size_t c = 0; c < n; ++c) {
    series.push_back({p.curve_ids.empty() ? "" : std::to_string(p.curve_ids[c]), p.grid,
                      p.curves[c]});
  }
  svg::line_plot(out, explain::to_string(p.kind) + ": " + p.features.front(), series,
                 p.features.front(), "prediction");
}

struct ExplainInputs {
  fs::path model_path;
  fs::path train_path;
  fs::path test_path;
  std::unique_ptr<models::Predictor> model;
  data::Table train;
  data::Table test;
};

ExplainInputs explain_inputs(const Session& s, const RunDir& run) {
  ExplainInputs in;
  const std::string source = model_source(s);
  in.model_path = run.require(source + "/model.json", source);
  in.train_path = run.require(kTrainCsv, "split");
  in.test_path = run.require(kTestCsv, "split");
  in.model = models::load_model(in.model_path);
  in.train = load(s, in.train_path);
  in.test = load(s, in.test_path);
  return in;
}

Json base_settings(const Session& s, const std::string& source) {
  Json c;
  c["model_source"] = source;
  c["target"] = target(s);
  c["column_kinds"] = column_kinds_json(s);
  return c;
}

// --- explanation methods ---------------------------------------------------------

void explain_vi(const Session& s, RunDir& run) {
  const Json cfg = method_section(s, "vi", {"repeats"});
  const auto repeats = get_or<std::size_t>(cfg, "repeats", 5, "explain.vi");
  const std::uint64_t seed = derive_seed(global_seed(s), kImportance);
  ExplainInputs in = explain_inputs(s, run);
  Json settings = base_settings(s, model_source(s));
  settings["repeats"] = repeats;
  settings["seed"] = seed;
  run.run({"explain.vi", settings, {in.model_path, in.test_path}}, [&](StageOutputs& out) {
    const auto report = explain::permutation_importance(*in.model, in.test, target(s), repeats,
                                                        seed, workers(s));
    out.write("explain/vi/importance.csv",
              [&](std::ostream& o) { explain::write_importance_csv(report, o); });
    out.write_json("explain/vi/importance.json", explain::to_json(report));
    std::vector<svg::Bar> bars;
    for (const auto& f : report.by_rank()) bars.push_back({f.feature, f.importance});
    out.write("explain/vi/importance.svg",
              [&](std::ostream& o) { svg::bar_chart(o, "permutation importance", bars); });
  });
}

void explain_pdp(const Session& s, RunDir& run) {
  const Json cfg = method_section(s, "pdp", {"features", "grid_size"});
  const auto grid = get_or<std::size_t>(cfg, "grid_size", 20, "explain.pdp");
  ExplainInputs in = explain_inputs(s, run);
  const auto names = chosen_features(cfg, "explain.pdp", in.model->schema(), false);
  Json settings = base_settings(s, model_source(s));
  settings["features"] = names;
  settings["grid_size"] = grid;
  run.run({"explain.pdp", settings, {in.model_path, in.train_path}}, [&](StageOutputs& out) {
    for (const auto& f : names) {
      const auto p = explain::pdp(*in.model, in.train, f, grid, workers(s));
      const std::string base = "explain/pdp/" + slug(f);
      out.write(base + ".csv", [&](std::ostream& o) { explain::write_profile_csv(p, o); });
      out.write_json(base + ".json", explain::to_json(p));
      out.write(base + ".svg", [&](std::ostream& o) { profile_svg(o, p, 1); });
    }
  });
}

void explain_ice(const Session& s, RunDir& run) {
  const Json cfg = method_section(s, "ice", {"features", "grid_size", "sample", "centered"});
  explain::IceOptions options;
  options.grid_size = get_or<std::size_t>(cfg, "grid_size", 20, "explain.ice");
  options.sample = get_opt<std::size_t>(cfg, "sample", "explain.ice");
  options.centered = get_or<bool>(cfg, "centered", false, "explain.ice");
  options.seed = derive_seed(global_seed(s), kIce);
  options.workers = workers(s);
  ExplainInputs in = explain_inputs(s, run);
  const auto names = chosen_features(cfg, "explain.ice", in.model->schema(), false);
  Json settings = base_settings(s, model_source(s));
  settings["features"] = names;
  settings["grid_size"] = options.grid_size;
  settings["sample"] = options.sample ? Json(*options.sample) : Json();
  settings["centered"] = options.centered;
  settings["seed"] = options.seed;
  run.run({"explain.ice", settings, {in.model_path, in.train_path}}, [&](StageOutputs& out) {
    for (const auto& f : names) {
      const auto p = explain::ice(*in.model, in.train, f, options);
      const std::string base = "explain/ice/" + slug(f);
      out.write(base + ".csv", [&](std::ostream& o) { explain::write_profile_csv(p, o); });
      out.write_json(base + ".json", explain::to_json(p));
      out.write(base + ".svg", [&](std::ostream& o) { profile_svg(o, p, 100); });
    }
  });
}

void explain_ale(const Session& s, RunDir& run) {
  const Json cfg = method_section(s, "ale", {"features", "bins"});
  const auto bins = get_or<std::size_t>(cfg, "bins", 10, "explain.ale");
  ExplainInputs in = explain_inputs(s, run);
  const auto names = chosen_features(cfg, "explain.ale", in.model->schema(), true);
  Json settings = base_settings(s, model_source(s));
  settings["features"] = names;
  settings["bins"] = bins;
  run.run({"explain.ale", settings, {in.model_path, in.train_path}}, [&](StageOutputs& out) {
    for (const auto& f : names) {
      const auto p = explain::ale_first_order(*in.model, in.train, f, bins);
      const std::string base = "explain/ale/" + slug(f);
      out.write(base + ".csv", [&](std::ostream& o) { explain::write_profile_csv(p, o); });
      out.write_json(base + ".json", explain::to_json(p));
      out.write(base + ".svg", [&](std::ostream& o) { profile_svg(o, p, 1); });
    }
  });
}

void explain_ale2(const Session& s, RunDir& run) {
  const Json cfg = method_section(s, "ale2", {"pairs", "bins"});
  const auto bins = get_or<std::size_t>(cfg, "bins", 10, "explain.ale2");
  ExplainInputs in = explain_inputs(s, run);
  auto pairs = get_or<std::vector<std::vector<std::string>>>(cfg, "pairs", {}, "explain.ale2");
  if (pairs.empty()) {
    const auto numeric = chosen_features(Json::object(), "explain.ale2", in.model->schema(), true);
    if (numeric.size() < 2) {
      throw ConfigError("explain.ale2 needs two numeric features; set explain.ale2.pairs");
    }
    pairs.push_back({numeric[0], numeric[1]});
  }
  for (const auto& pr : pairs) {
    if (pr.size() != 2) throw ConfigError("explain.ale2.pairs entries must name two features");
  }
  Json settings = base_settings(s, model_source(s));
  settings["pairs"] = pairs;
  settings["bins"] = bins;
  run.run({"explain.ale2", settings, {in.model_path, in.train_path}}, [&](StageOutputs& out) {
    for (const auto& pr : pairs) {
      const auto p = explain::ale_second_order(*in.model, in.train, pr[0], pr[1], bins);
      const std::string base = "explain/ale2/" + slug(pr[0]) + "__" + slug(pr[1]);
      out.write(base + ".csv", [&](std::ostream& o) { explain::write_profile_csv(p, o); });
      out.write_json(base + ".json", explain::to_json(p));
      out.write(base + ".svg", [&](std::ostream& o) {
        svg::heatmap(o, "ale2: " + pr[0] + " x " + pr[1], p.grid, p.grid2, p.curves);
      });
    }
  });
}

void explain_lime(const Session& s, RunDir& run) {
  const Json cfg = method_section(s, "lime", {"rows", "k", "samples", "kernel_width"});
  ExplainInputs in = explain_inputs(s, run);
  const auto rows = chosen_rows(cfg, "explain.lime", in.test.n_rows());
  explain::LimeOptions options;
  options.k_features = get_or<std::size_t>(
      cfg, "k", std::min<std::size_t>(5, in.model->schema().size()), "explain.lime");
  options.n_samples = get_or<std::size_t>(cfg, "samples", options.n_samples, "explain.lime");
  options.kernel_width = get_opt<double>(cfg, "kernel_width", "explain.lime");
  const std::uint64_t seed = derive_seed(global_seed(s), kLime);
  Json settings = base_settings(s, model_source(s));
  settings["rows"] = rows;
  settings["k"] = options.k_features;
  settings["samples"] = options.n_samples;
  settings["kernel_width"] = options.kernel_width ? Json(*options.kernel_width) : Json();
  settings["seed"] = seed;
  run.run({"explain.lime", settings, {in.model_path, in.train_path, in.test_path}},
          [&](StageOutputs& out) {
            std::vector<explain::LimeExplanation> all;
            Json j = Json::array();
            for (std::size_t r : rows) {
              auto o = options;
              o.seed = derive_seed(seed, r);
              all.push_back(explain::lime_explain(*in.model, in.train, in.test, r, o));
              j.push_back(Json(explain::to_json(all.back())));
            }
            out.write("explain/lime/lime.csv",
                      [&](std::ostream& o) { explain::write_lime_csv(all, o); });
            out.write_json("explain/lime/lime.json", j);
            for (const auto& e : all) {
              std::vector<svg::Bar> bars;
              for (const auto& w : e.weights) bars.push_back({w.feature, w.weight});
              out.write("explain/lime/row" + std::to_string(e.instance) + ".svg",
                        [&](std::ostream& o) {
                          svg::bar_chart(o, "LIME row " + std::to_string(e.instance), bars);
                        });
            }
          });
}

void explain_shapley(const Session& s, RunDir& run) {
  const Json cfg =
      method_section(s, "shapley", {"rows", "method", "samples", "features", "background_rows"});
  ExplainInputs in = explain_inputs(s, run);
  const auto rows = chosen_rows(cfg, "explain.shapley", in.test.n_rows());
  auto names = get_or<std::vector<std::string>>(cfg, "features", {}, "explain.shapley");
  for (const auto& n : names) in.model->schema().index_of(n);
  const std::size_t d = names.empty() ? in.model->schema().size() : names.size();
  const auto method_name = get_or<std::string>(cfg, "method", "auto", "explain.shapley");
  explain::ShapleyMethod method;
  if (method_name == "exact") {
    method = explain::ShapleyMethod::exact;
  } else if (method_name == "monte_carlo") {
    method = explain::ShapleyMethod::monte_carlo;
  } else if (method_name == "auto") {
    method = d <= explain::kMaxExactShapleyFeatures ? explain::ShapleyMethod::exact
                                                    : explain::ShapleyMethod::monte_carlo;
  } else {
    throw ConfigError("explain.shapley.method must be auto, exact or monte_carlo");
  }
  const auto samples = get_or<std::size_t>(cfg, "samples", 2000, "explain.shapley");
  const auto bg_rows = get_or<std::size_t>(cfg, "background_rows", 500, "explain.shapley");
  const std::uint64_t seed = derive_seed(global_seed(s), kShapley);
  Json settings = base_settings(s, model_source(s));
  settings["rows"] = rows;
  settings["method"] = method == explain::ShapleyMethod::exact ? "exact" : "monte_carlo";
  settings["samples"] = samples;
  settings["features"] = names;
  settings["background_rows"] = bg_rows;
  settings["seed"] = seed;
  run.run({"explain.shapley", settings, {in.model_path, in.train_path, in.test_path}},
          [&](StageOutputs& out) {
            const data::Table background =
                subsample(in.train, bg_rows, derive_seed(seed, kBackground));
            std::vector<explain::ShapleyAttribution> all;
            Json j = Json::array();
            for (std::size_t r : rows) {
              all.push_back(explain::shapley_explain(*in.model, background, in.test, r, names,
                                                     method, samples, derive_seed(seed, r)));
              j.push_back(Json(explain::to_json(all.back())));
            }
            out.write("explain/shapley/shapley.csv",
                      [&](std::ostream& o) { explain::write_shapley_csv(all, o); });
            out.write_json("explain/shapley/shapley.json", j);
            for (const auto& a : all) {
              std::vector<svg::Bar> bars;
              for (std::size_t f = 0; f < a.features.size(); ++f) {
                bars.push_back({a.features[f], a.values[f]});
              }
              out.write("explain/shapley/row" + std::to_string(a.instance) + ".svg",
                        [&](std::ostream& o) {
                          svg::bar_chart(o, "Shapley row " + std::to_string(a.instance), bars);
                        });
            }
          });
}

void explain_anchors(const Session& s, RunDir& run) {
  const Json cfg =
      method_section(s, "anchors", {"rows", "tau", "samples", "threshold", "delta"});
  ExplainInputs in = explain_inputs(s, run);
  const auto rows = chosen_rows(cfg, "explain.anchors", in.test.n_rows());
  explain::AnchorOptions options;
  options.tau = get_or<double>(cfg, "tau", options.tau, "explain.anchors");
  options.n_samples_per_eval =
      get_or<std::size_t>(cfg, "samples", options.n_samples_per_eval, "explain.anchors");
  options.threshold = get_or<double>(cfg, "threshold", options.threshold, "explain.anchors");
  options.delta = get_or<double>(cfg, "delta", options.delta, "explain.anchors");
  const std::uint64_t seed = derive_seed(global_seed(s), kAnchors);
  Json settings = base_settings(s, model_source(s));
  settings["rows"] = rows;
  settings["tau"] = options.tau;
  settings["samples"] = options.n_samples_per_eval;
  settings["threshold"] = options.threshold;
  settings["delta"] = options.delta;
  settings["seed"] = seed;
  run.run({"explain.anchors", settings, {in.model_path, in.train_path, in.test_path}},
          [&](StageOutputs& out) {
            std::vector<explain::AnchorRule> all;
            Json j = Json::array();
            for (std::size_t r : rows) {
              auto o = options;
              o.seed = derive_seed(seed, r);
              all.push_back(explain::anchor_explain(*in.model, in.train, in.test, r, o));
              j.push_back(Json(explain::to_json(all.back())));
            }
            out.write("explain/anchors/anchors.csv",
                      [&](std::ostream& o) { explain::write_anchor_table_csv(all, o); });
            out.write_json("explain/anchors/anchors.json", j);
          });
}

}  // namespace

const std::vector<std::string>& explain_methods() {
  static const std::vector<std::string> names{"vi",  "pdp",  "ice",     "ale",
                                              "ale2", "lime", "shapley", "anchors"};
  return names;
}

void cmd_synth(const Session& s) {
  Json cfg = s.config.section("synth");
  check_keys(cfg, {"generator", "n_rows", "seed", "noise", "missing_fraction"}, "synth");
  synth::SyntheticSpec spec;
  spec.generator = get_or<std::string>(cfg, "generator", spec.generator, "synth");
  spec.n_rows = get_or<std::size_t>(cfg, "n_rows", spec.n_rows, "synth");
  spec.seed = get_or<std::uint64_t>(cfg, "seed", global_seed(s), "synth");
  spec.noise = get_or<double>(cfg, "noise", spec.noise, "synth");
  spec.missing_fraction = get_or<double>(cfg, "missing_fraction", spec.missing_fraction, "synth");
  Json settings{{"generator", spec.generator},
                {"n_rows", spec.n_rows},
                {"seed", spec.seed},
                {"noise", spec.noise},
                {"missing_fraction", spec.missing_fraction}};
  RunDir run = open_run(s);
  run.run({"synth", settings, {}}, [&](StageOutputs& out) {
    const auto data = synth::generate(spec);
    out.write(kSynthData, [&](std::ostream& o) { data::write_csv(data.table, o); });
    out.write_json("synth/truth.json", Json(data.truth));
  });
}

void cmd_inspect(const Session& s) {
  RunDir run = open_run(s);
  const fs::path input = source_data(s, run);
  Json settings{{"column_kinds", column_kinds_json(s)}};
  run.run({"inspect", settings, {input}}, [&](StageOutputs& out) {
    const auto report = data::missingness(load(s, input));
    out.write_json("inspect/missingness.json", Json(data::to_json(report)));
    out.write("inspect/patterns.csv",
              [&](std::ostream& o) { data::write_pattern_csv(report, o); });
    std::vector<svg::Bar> bars;
    for (const auto& c : report.columns) bars.push_back({c.name, c.fraction});
    out.write("inspect/missingness.svg",
              [&](std::ostream& o) { svg::bar_chart(o, "missing fraction per column", bars); });
  });
}

void cmd_impute(const Session& s) {
  Json cfg = s.config.section("impute");
  check_keys(cfg, {"strategy"}, "impute");
  const auto strategy_name = get_or<std::string>(cfg, "strategy", "median_mode", "impute");
  const auto strategy = data::parse_impute_strategy(strategy_name);
  const std::uint64_t seed = derive_seed(global_seed(s), kImpute);
  RunDir run = open_run(s);
  const fs::path input = source_data(s, run);
  Json settings{{"strategy", strategy_name},
                {"seed", seed},
                {"column_kinds", column_kinds_json(s)}};
  run.run({"impute", settings, {input}}, [&](StageOutputs& out) {
    const auto table = data::impute(load(s, input), strategy, seed);
    out.write(kImputed, [&](std::ostream& o) { data::write_csv(table, o); });
  });
}

void cmd_split(const Session& s) {
  Json cfg = s.config.section("split");
  check_keys(cfg, {"train_fraction", "stratify"}, "split");
  data::SplitSpec spec;
  spec.train_fraction = get_or<double>(cfg, "train_fraction", spec.train_fraction, "split");
  spec.stratify_on = get_opt<std::string>(cfg, "stratify", "split");
  spec.seed = derive_seed(global_seed(s), kSplit);
  RunDir run = open_run(s);
  const fs::path input = run.require(kImputed, "impute");
  Json settings{{"train_fraction", spec.train_fraction},
                {"stratify", spec.stratify_on ? Json(*spec.stratify_on) : Json()},
                {"seed", spec.seed},
                {"column_kinds", column_kinds_json(s)}};
  run.run({"split", settings, {input}}, [&](StageOutputs& out) {
    const auto [train, test] = data::split(load(s, input), spec);
    out.write(kTrainCsv, [&](std::ostream& o) { data::write_csv(train, o); });
    out.write(kTestCsv, [&](std::ostream& o) { data::write_csv(test, o); });
  });
}

void cmd_train(const Session& s) {
  const ModelSpec spec = model_spec(s);
  RunDir run = open_run(s);
  const fs::path train_path = run.require(kTrainCsv, "split");
  const fs::path test_path = run.require(kTestCsv, "split");
  Json settings{{"type", spec.type},
                {"params", spec.params},
                {"target", target(s)},
                {"features", features(s)},
                {"column_kinds", column_kinds_json(s)}};
  run.run({"train", settings, {train_path, test_path}}, [&](StageOutputs& out) {
    const auto train = load(s, train_path);
    const auto test = load(s, test_path);
    const auto model = fit(spec, train, target(s), features(s));
    out.write("train/model.json", model_json(*model));
    out.write_json("train/metrics.json", fit_metrics(*model, train, test, target(s)));
    if (const auto* gbm = dynamic_cast<const models::GbmModel*>(model.get())) {
      std::vector<double> x(gbm->training_loss().size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
      out.write("train/loss.svg", [&](std::ostream& o) {
        svg::line_plot(o, "training loss", {{"train", x, gbm->training_loss()}}, "stage",
                       "loss");
      });
    }
  });
}

void cmd_tune(const Session& s) {
  const ModelSpec spec = model_spec(s);
  if (spec.type != "gbm") throw ConfigError("tune needs model.type = gbm");
  if (!s.config.has("tune")) throw ConfigError("tune needs a \"tune\" grid in the config");
  Json tune = s.config.doc().at("tune");
  tuning::GridSpec grid;
  if (tune.is_string()) {
    if (tune.get<std::string>() != "default") {
      throw ConfigError("tune must be an object or the string \"default\"");
    }
    grid = tuning::default_grid();
    grid.base = gbm_params(spec);
    grid.seed = derive_seed(global_seed(s), kTune);
  } else {
    if (!tune.is_object()) throw ConfigError("tune must be an object or \"default\"");
    if (!tune.contains("base")) tune["base"] = spec.params;
    if (!tune.contains("seed")) tune["seed"] = derive_seed(global_seed(s), kTune);
    grid = tuning::grid_from_json(tune);
  }
  const models::GbmParams refit_params = gbm_params(spec);
  RunDir run = open_run(s);
  const fs::path train_path = run.require(kTrainCsv, "split");
  const fs::path test_path = run.require(kTestCsv, "split");
  Json settings{{"grid", tuning::to_json(grid)},
                {"target", target(s)},
                {"features", features(s)},
                {"refit_seed", refit_params.seed},
                {"column_kinds", column_kinds_json(s)}};
  run.run({"tune", settings, {train_path, test_path}}, [&](StageOutputs& out) {
    auto train = load(s, train_path);
    const auto test = load(s, test_path);
    if (!features(s).empty()) {
      std::vector<data::Column> cols;
      for (const auto& f : features(s)) cols.push_back(train.column(f));
      cols.push_back(train.column(target(s)));
      train = data::Table(std::move(cols));
    }
    const auto results = tuning::search(train, target(s), grid, workers(s));
    out.write("tune/results.csv",
              [&](std::ostream& o) { tuning::write_results_csv(results, o); });
    out.write("tune/timings.csv",
              [&](std::ostream& o) { tuning::write_timings_csv(results, o); });
    const auto& best = tuning::best_trial(results);
    models::GbmParams params = best.params;
    params.seed = refit_params.seed;
    const auto model = models::train_gbm(train, target(s), params, features(s));
    Json summary;
    summary["grid_points"] = results.size();
    summary["failed"] = std::count_if(results.begin(), results.end(),
                                      [](const auto& r) { return !r.ok(); });
    summary["best_index"] = best.index;
    summary["best_cv_rmse"] = best.cv_metric;
    summary["best_iteration"] = best.best_iteration;
    summary["params"] = Json(models::to_json(params));
    summary["metrics"] = fit_metrics(model, train, test, target(s));
    out.write("tune/model.json", model_json(model));
    out.write_json("tune/best.json", summary);
  });
}

void cmd_explain(const Session& s, const std::string& method) {
  RunDir run = open_run(s);
  if (method == "vi") return explain_vi(s, run);
  if (method == "pdp") return explain_pdp(s, run);
  if (method == "ice") return explain_ice(s, run);
  if (method == "ale") return explain_ale(s, run);
  if (method == "ale2") return explain_ale2(s, run);
  if (method == "lime") return explain_lime(s, run);
  if (method == "shapley") return explain_shapley(s, run);
  if (method == "anchors") return explain_anchors(s, run);
  throw ConfigError("unknown explanation method '" + method + "'");
}

void cmd_fairness(const Session& s) {
  Json cfg = s.config.section("fairness");
  check_keys(cfg, {"group", "threshold"}, "fairness");
  const auto group = get_opt<std::string>(cfg, "group", "fairness");
  if (!group) throw ConfigError("fairness needs fairness.group (or --group)");
  const auto threshold = get_or<double>(cfg, "threshold", 0.5, "fairness");
  RunDir run = open_run(s);
  const std::string source = model_source(s);
  const fs::path model_path = run.require(source + "/model.json", source);
  const fs::path test_path = run.require(kTestCsv, "split");
  Json settings = base_settings(s, source);
  settings["group"] = *group;
  settings["threshold"] = threshold;
  run.run({"fairness", settings, {model_path, test_path}}, [&](StageOutputs& out) {
    const auto model = models::load_model(model_path);
    const auto report =
        fairness::group_fairness(*model, load(s, test_path), target(s), *group, threshold);
    out.write("fairness/groups.csv",
              [&](std::ostream& o) { fairness::write_group_csv(report, o); });
    out.write("fairness/roc.csv", [&](std::ostream& o) { fairness::write_roc_csv(report, o); });
    out.write_json("fairness/report.json", Json(fairness::to_json(report)));
    std::vector<svg::Series> series;
    for (const auto& g : report.groups) {
      svg::Series line{g.level, {}, {}};
      for (const auto& p : g.roc) {
        line.x.push_back(p.fpr);
        line.y.push_back(p.tpr);
      }
      if (!line.x.empty()) series.push_back(std::move(line));
    }
    out.write("fairness/roc.svg", [&](std::ostream& o) {
      svg::line_plot(o, "ROC by " + *group, series, "false positive rate",
                     "true positive rate");
    });
  });
}

void cmd_pipeline(const Session& s) {
  if (s.config.has("synth") && !s.config.has("data")) cmd_synth(s);
  cmd_inspect(s);
  cmd_impute(s);
  cmd_split(s);
  cmd_train(s);
  if (s.config.has("tune")) cmd_tune(s);
  const Json e = explain_section(s);
  const auto methods =
      get_or<std::vector<std::string>>(e, "methods", explain_methods(), "explain");
  for (const auto& m : methods) cmd_explain(s, m);
  if (s.config.section("fairness").contains("group")) cmd_fairness(s);
}

}  // namespace xai::cli
