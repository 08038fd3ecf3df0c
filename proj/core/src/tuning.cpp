#include "xai/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "xai/error.hpp"
#include "xai/format.hpp"
#include "xai/parallel.hpp"
#include "xai/random.hpp"

namespace xai::tuning {
namespace {

void apply_axis(models::GbmParams& p, const std::string& name, double v) {
  auto count = [&](const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ConfigError(std::string(what) + " values must be positive integers");
    }
    return static_cast<std::size_t>(v);
  };
  if (name == "n_trees") {
    p.n_trees = count("n_trees");
  } else if (name == "learning_rate") {
    p.learning_rate = v;
  } else if (name == "max_depth") {
    p.max_depth = count("max_depth");
  } else if (name == "min_node_size") {
    p.min_node_size = count("min_node_size");
  } else if (name == "col_sample") {
    p.col_sample = v;
  } else if (name == "row_subsample") {
    p.row_subsample = v;
  } else if (name == "loss") {
    p.loss = v == 0.0 ? models::GbmLoss::squared : models::GbmLoss::logistic;
  } else {
    throw ConfigError("unknown grid axis '" + name + "'");
  }
}

std::vector<double> axis_values(const std::string& name,
                                const nlohmann::ordered_json& values) {
  if (!values.is_array()) {
    throw ConfigError("grid axis '" + name + "' must be a list");
  }
  std::vector<double> out;
  for (const auto& v : values) {
    if (name == "loss" && v.is_string()) {
      out.push_back(models::parse_gbm_loss(v.get<std::string>()) ==
                            models::GbmLoss::squared
                        ? 0.0
                        : 1.0);
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      throw ConfigError("grid axis '" + name + "' holds a non-numeric value");
    }
  }
  return out;
}

struct EncodedData {
  models::Schema schema;
  Frame x;
  std::vector<double> y;
};

EncodedData encode(const data::Table& train, const std::string& target) {
  const std::string t = target;
  models::Schema schema =
      models::Schema::from_table(train, std::span<const std::string>(&t, 1));
  Frame x = schema.encode(train);
  auto y = models::target_values(train, target);
  return {std::move(schema), std::move(x), std::move(y)};
}

TrialResult evaluate_encoded(const EncodedData& d, const models::GbmParams& params,
                             const std::vector<data::Fold>& folds) {
  if (folds.empty()) throw ConfigError("no folds to evaluate");
  TrialResult result;
  result.params = params;
  std::vector<std::vector<double>> curves;
  curves.reserve(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      const Frame xt = d.x.select_rows(folds[f].train);
      const Frame xv = d.x.select_rows(folds[f].validation);
      std::vector<double> yt, yv;
      for (std::size_t r : folds[f].train) yt.push_back(d.y[r]);
      for (std::size_t r : folds[f].validation) yv.push_back(d.y[r]);
      const auto model = models::fit_gbm(xt, d.schema, yt, params);
      curves.push_back(model.staged_rmse(xv, yv));
    } catch (const Error& e) {
      const std::string what = "fold " + std::to_string(f + 1) + ": " + e.what();
      switch (e.category()) {
        case ErrorCategory::config: throw ConfigError(what);
        case ErrorCategory::data: throw DataError(what);
        case ErrorCategory::computation: throw ComputeError(what);
      }
      throw;
    }
  }
  const double n_folds = static_cast<double>(folds.size());
  std::size_t best = 0;
  double best_mean = 0.0;
  for (std::size_t m = 0; m < params.n_trees; ++m) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c[m];
    const double mean = sum / n_folds;
    if (m == 0 || mean < best_mean) {
      best_mean = mean;
      best = m;
    }
  }
  double sum = 0.0;
  for (const auto& c : curves) {
    result.per_fold_metrics.push_back(c[best]);
    sum += c[best];
  }
  result.cv_metric = sum / n_folds;
  result.best_iteration = best + 1;
  return result;
}

}  // namespace

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& [_, values] : axes) n *= values.size();
  return n;
}

const std::vector<std::string>& grid_axis_names() {
  static const std::vector<std::string> names{
      "n_trees", "learning_rate", "max_depth", "min_node_size",
      "col_sample", "row_subsample", "loss"};
  return names;
}

GridSpec default_grid() {
  GridSpec spec;
  spec.axes = {{"learning_rate", {0.01, 0.05, 0.1, 0.3}},
               {"max_depth", {1, 3, 5, 7}},
               {"min_node_size", {1, 3, 5}},
               {"col_sample", {0.8, 0.9, 1.0}},
               {"row_subsample", {0.75, 0.8, 0.9, 1.0}}};
  spec.base.n_trees = 1000;
  return spec;
}

GridSpec grid_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("grid spec must be an object");
  GridSpec spec;
  try {
    if (j.contains("base")) {
      spec.base = models::gbm_params_from_json(nlohmann::json(j.at("base")));
    }
    spec.k_folds = j.value("k_folds", spec.k_folds);
    spec.seed = j.value("seed", spec.seed);
    spec.metric = j.value("metric", spec.metric);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad grid spec: ") + e.what());
  }
  if (spec.metric != "rmse") throw ConfigError("only the rmse metric is supported");
  if (j.contains("axes")) {
    for (const auto& axis : j.at("axes")) {
      const auto name = axis.at("name").get<std::string>();
      spec.axes.emplace_back(name, axis_values(name, axis.at("values")));
    }
  }
  const auto& names = grid_axis_names();
  for (const auto& [key, value] : j.items()) {
    if (std::find(names.begin(), names.end(), key) != names.end()) {
      spec.axes.emplace_back(key, axis_values(key, value));
    } else if (key != "axes" && key != "base" && key != "k_folds" &&
               key != "seed" && key != "metric") {
      throw ConfigError("unknown grid key '" + key + "'");
    }
  }
  return spec;
}

nlohmann::ordered_json to_json(const GridSpec& spec) {
  nlohmann::ordered_json j;
  auto& axes = j["axes"] = nlohmann::ordered_json::array();
  for (const auto& [name, values] : spec.axes) {
    axes.push_back({{"name", name}, {"values", values}});
  }
  j["base"] = models::to_json(spec.base);
  j["k_folds"] = spec.k_folds;
  j["seed"] = spec.seed;
  j["metric"] = spec.metric;
  return j;
}

std::vector<models::GbmParams> expand_grid(const GridSpec& spec) {
  for (std::size_t a = 0; a < spec.axes.size(); ++a) {
    const auto& [name, values] = spec.axes[a];
    if (values.empty()) throw ConfigError("grid axis '" + name + "' has no values");
    for (std::size_t b = 0; b < a; ++b) {
      if (spec.axes[b].first == name) {
        throw ConfigError("grid axis '" + name + "' declared twice");
      }
    }
  }
  std::vector<models::GbmParams> out;
  out.reserve(spec.size());
  std::vector<std::size_t> pos(spec.axes.size(), 0);
  for (;;) {
    models::GbmParams p = spec.base;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
      apply_axis(p, spec.axes[a].first, spec.axes[a].second[pos[a]]);
    }
    p.validate();
    out.push_back(p);
    // Odometer: the last declared axis turns fastest.
    std::size_t a = spec.axes.size();
    while (a > 0) {
      --a;
      if (++pos[a] < spec.axes[a].second.size()) break;
      pos[a] = 0;
      if (a == 0) return out;
    }
    if (spec.axes.empty()) return out;
  }
}

TrialResult evaluate_trial(const data::Table& train, const std::string& target,
                           const models::GbmParams& params,
                           const std::vector<data::Fold>& folds) {
  return evaluate_encoded(encode(train, target), params, folds);
}

std::uint64_t fold_seed(std::uint64_t spec_seed) {
  return derive_seed(spec_seed, 0x666f6c64);
}

std::uint64_t trial_seed(std::uint64_t spec_seed, std::size_t index) {
  return derive_seed(spec_seed, 0x747269616c, index);
}

std::vector<TrialResult> search(const data::Table& train, const std::string& target,
                                const GridSpec& spec, std::size_t workers) {
  if (workers < 1) throw ConfigError("workers must be at least 1");
  const auto grid = expand_grid(spec);
  const auto folds = data::kfold(train, spec.k_folds, fold_seed(spec.seed));
  const EncodedData encoded = encode(train, target);
  std::vector<TrialResult> results(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    models::GbmParams params = grid[i];
    params.seed = trial_seed(spec.seed, i);
    const auto start = std::chrono::steady_clock::now();
    TrialResult r;
    try {
      r = evaluate_encoded(encoded, params, folds);
    } catch (const std::exception& e) {
      r = TrialResult{};
      r.params = params;
      r.error = e.what();
    }
    r.index = i;
    r.wall_time = std::chrono::steady_clock::now() - start;
    results[i] = std::move(r);
  });
  return results;
}

const TrialResult& best_trial(const std::vector<TrialResult>& results) {
  const TrialResult* best = nullptr;
  for (const auto& r : results) {
    if (!r.ok()) continue;
    if (!best || r.cv_metric < best->cv_metric) best = &r;
  }
  if (!best) throw ComputeError("every trial failed; no best trial");
  return *best;
}

void write_results_csv(const std::vector<TrialResult>& results, std::ostream& out) {
  std::size_t k = 0;
  for (const auto& r : results) k = std::max(k, r.per_fold_metrics.size());
  out << "trial,n_trees,learning_rate,max_depth,min_node_size,col_sample,"
         "row_subsample,loss,seed,cv_rmse,best_iteration";
  for (std::size_t f = 0; f < k; ++f) out << ",fold_" << f + 1;
  out << ",status\n";
  for (const auto& r : results) {
    const auto& p = r.params;
    out << r.index << ',' << p.n_trees << ',' << format_double(p.learning_rate) << ','
        << p.max_depth << ',' << p.min_node_size << ',' << format_double(p.col_sample)
        << ',' << format_double(p.row_subsample) << ',' << models::to_string(p.loss)
        << ',' << p.seed << ',';
    if (r.ok()) {
      out << format_double(r.cv_metric) << ',' << r.best_iteration;
    } else {
      out << "NA,NA";
    }
    for (std::size_t f = 0; f < k; ++f) {
      out << ',';
      out << (f < r.per_fold_metrics.size() ? format_double(r.per_fold_metrics[f])
                                            : std::string("NA"));
    }
    out << ',' << (r.ok() ? std::string("ok") : csv_escape("error: " + *r.error)) << '\n';
  }
}

void write_timings_csv(const std::vector<TrialResult>& results, std::ostream& out) {
  out << "trial,wall_time_s\n";
  for (const auto& r : results) {
    out << r.index << ',' << format_double(r.wall_time.count()) << '\n';
  }
}

}  // namespace xai::tuning
