#include <cmath>
#include <numeric>

#include "detail.hpp"
#include "xai/error.hpp"
#include "xai/models.hpp"
#include "xai/random.hpp"

namespace xai::models {
namespace {

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_loss(double y, double raw) {
  // log(1 + e^raw) - y * raw
  return std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw))) - y * raw;
}

}  // namespace

std::string to_string(GbmLoss loss) {
  return loss == GbmLoss::logistic ? "logistic" : "squared";
}

GbmLoss parse_gbm_loss(std::string_view name) {
  if (name == "squared" || name == "gaussian") return GbmLoss::squared;
  if (name == "logistic" || name == "bernoulli") return GbmLoss::logistic;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected squared or logistic)");
}

void GbmParams::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a finite non-negative number");
  }
  if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
  if (min_node_size < 1) throw ConfigError("min_node_size must be at least 1");
  if (!(col_sample > 0.0 && col_sample <= 1.0)) {
    throw ConfigError("col_sample must lie in (0, 1]");
  }
  if (!(row_subsample > 0.0 && row_subsample <= 1.0)) {
    throw ConfigError("row_subsample must lie in (0, 1]");
  }
}

nlohmann::json to_json(const GbmParams& p) {
  return {{"n_trees", p.n_trees},
          {"learning_rate", p.learning_rate},
          {"max_depth", p.max_depth},
          {"min_node_size", p.min_node_size},
          {"col_sample", p.col_sample},
          {"row_subsample", p.row_subsample},
          {"loss", to_string(p.loss)},
          {"seed", p.seed}};
}

GbmParams gbm_params_from_json(const nlohmann::json& j, const GbmParams& defaults) {
  static const std::vector<std::string> known{
      "type", "n_trees", "learning_rate", "max_depth", "min_node_size",
      "col_sample", "row_subsample", "loss", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown GBM parameter '" + key + "'");
    }
  }
  GbmParams p = defaults;
  try {
    p.n_trees = j.value("n_trees", p.n_trees);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_node_size = j.value("min_node_size", p.min_node_size);
    p.col_sample = j.value("col_sample", p.col_sample);
    p.row_subsample = j.value("row_subsample", p.row_subsample);
    p.seed = j.value("seed", p.seed);
    if (j.contains("loss")) p.loss = parse_gbm_loss(j.at("loss").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad GBM parameter: ") + e.what());
  }
  p.validate();
  return p;
}

GbmModel::GbmModel(Schema schema, GbmParams params, double init_score,
                   std::vector<RegressionTree> trees)
    : Predictor(std::move(schema), params.loss == GbmLoss::logistic
                                       ? OutputKind::probability
                                       : OutputKind::regression),
      params_(params),
      init_score_(init_score),
      trees_(std::move(trees)),
      active_stages_(trees_.size()) {}

void GbmModel::set_active_stages(std::size_t m) {
  if (m < 1 || m > trees_.size()) {
    throw ConfigError("active stages must lie in [1, " +
                      std::to_string(trees_.size()) + "]");
  }
  active_stages_ = m;
}

double GbmModel::link(double raw) const {
  return params_.loss == GbmLoss::logistic ? sigmoid(raw) : raw;
}

std::vector<double> GbmModel::predict_stage(const Frame& rows, std::size_t m) const {
  m = std::min(m, trees_.size());
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    double raw = init_score_;
    const auto row = rows.row(r);
    for (std::size_t t = 0; t < m; ++t) raw += params_.learning_rate * trees_[t].predict(row);
    out[r] = link(raw);
  }
  return out;
}

std::vector<double> GbmModel::score(const Frame& rows) const {
  return predict_stage(rows, active_stages_);
}

std::vector<double> GbmModel::staged_rmse(const Frame& rows,
                                          std::span<const double> truth) const {
  if (truth.size() != rows.rows()) {
    throw ComputeError("staged_rmse: truth length differs from row count");
  }
  std::vector<double> raw(rows.rows(), init_score_);
  std::vector<double> pred(rows.rows());
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& tree : trees_) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      raw[r] += params_.learning_rate * tree.predict(rows.row(r));
      pred[r] = link(raw[r]);
    }
    out.push_back(rmse(pred, truth));
  }
  return out;
}

nlohmann::json GbmModel::to_json() const {
  auto j = json_header();
  j["params"] = models::to_json(params_);
  j["init_score"] = init_score_;
  j["active_stages"] = active_stages_;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return j;
}

std::unique_ptr<GbmModel> GbmModel::from_json(const nlohmann::json& j) {
  std::vector<RegressionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(RegressionTree::from_json(t));
  auto model = std::make_unique<GbmModel>(
      Schema::from_json(j.at("schema")), gbm_params_from_json(j.at("params")),
      j.at("init_score").get<double>(), std::move(trees));
  model->set_active_stages(j.value("active_stages", model->n_stages()));
  return model;
}

GbmModel fit_gbm(const Frame& x, Schema schema, std::span<const double> y,
                 const GbmParams& params) {
  params.validate();
  const std::size_t n = x.rows();
  if (n == 0) throw DataError("empty training table");
  if (y.size() != n) throw DataError("target length differs from row count");
  if (params.min_node_size >= n) {
    throw ConfigError("min_node_size (" + std::to_string(params.min_node_size) +
                      ") must be below the training row count (" +
                      std::to_string(n) + ")");
  }
  detail::require_complete(x, schema);
  const bool logistic = params.loss == GbmLoss::logistic;
  if (logistic) {
    for (double v : y) {
      if (v != 0.0 && v != 1.0) throw DataError("logistic loss needs a 0/1 target");
    }
  }

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double init = mean;
  if (logistic) {
    const double p = std::clamp(mean, 1e-12, 1.0 - 1e-12);
    init = std::log(p / (1.0 - p));
  }

  const SortedIndex sorted(x, schema.features());
  std::vector<double> raw(n, init);
  std::vector<double> gradient(n);
  std::vector<std::uint8_t> in_sample(n, 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n_sub = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(params.row_subsample * static_cast<double>(n))));

  Rng rng(params.seed);
  std::vector<RegressionTree> trees;
  trees.reserve(params.n_trees);
  std::vector<double> training_loss;
  training_loss.reserve(params.n_trees);
  for (std::size_t m = 0; m < params.n_trees; ++m) {
    for (std::size_t r = 0; r < n; ++r) {
      gradient[r] = y[r] - (logistic ? sigmoid(raw[r]) : raw[r]);
    }
    if (n_sub < n) {
      std::fill(in_sample.begin(), in_sample.end(), 0);
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t i = 0; i < n_sub; ++i) in_sample[order[i]] = 1;
    }
    GrowParams grow;
    grow.max_depth = params.max_depth;
    grow.min_node_size = params.min_node_size;
    grow.col_sample = params.col_sample;
    grow.seed = derive_seed(params.seed, m);
    RegressionTree tree =
        grow_tree(x, schema.features(), sorted, gradient, 1, in_sample, grow);

    if (logistic) {
      // One Newton step per leaf: sum of gradients over sum of hessians.
      std::vector<double> num(tree.nodes().size(), 0.0);
      std::vector<double> den(tree.nodes().size(), 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        if (!in_sample[r]) continue;
        const std::size_t leaf = tree.leaf_index(x.row(r));
        const double p = sigmoid(raw[r]);
        num[leaf] += gradient[r];
        den[leaf] += p * (1.0 - p);
      }
      for (std::size_t i = 0; i < num.size(); ++i) {
        if (!tree.nodes()[i].is_leaf()) continue;
        tree.set_value(i, den[i] > 1e-12 ? std::clamp(num[i] / den[i], -20.0, 20.0) : 0.0);
      }
    }

    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      raw[r] += params.learning_rate * tree.predict(x.row(r));
      if (logistic) {
        loss += log_loss(y[r], raw[r]);
      } else {
        const double d = y[r] - raw[r];
        loss += d * d;
      }
    }
    training_loss.push_back(loss / static_cast<double>(n));
    trees.push_back(std::move(tree));
  }

  GbmModel model(std::move(schema), params, init, std::move(trees));
  model.training_loss_ = std::move(training_loss);
  return model;
}

GbmModel train_gbm(const data::Table& train, const std::string& target,
                   const GbmParams& params, std::span<const std::string> features) {
  if (train.n_rows() == 0) throw DataError("empty training table");
  Schema schema = Schema::from_table(train, features, target);
  const Frame x = schema.encode(train);
  const auto y = target_values(train, target);
  return fit_gbm(x, std::move(schema), y, params);
}

}  // namespace xai::models
