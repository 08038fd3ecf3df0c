#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

#include "xai/error.hpp"
#include "xai/explain_local.hpp"
#include "xai/format.hpp"

namespace xai::explain {
namespace {

struct WlsFit {
  Eigen::VectorXd beta;  // intercept first
  double sse = 0.0;
};

WlsFit weighted_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& sqrt_w,
                    const std::vector<std::size_t>& columns) {
  const auto n = design.rows();
  Eigen::MatrixXd a(n, static_cast<Eigen::Index>(columns.size()) + 1);
  a.col(0) = sqrt_w;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    a.col(static_cast<Eigen::Index>(k) + 1) =
        design.col(static_cast<Eigen::Index>(columns[k])).cwiseProduct(sqrt_w);
  }
  const Eigen::VectorXd b = y.cwiseProduct(sqrt_w);
  WlsFit fit;
  fit.beta = a.colPivHouseholderQr().solve(b);
  fit.sse = (a * fit.beta - b).squaredNorm();
  return fit;
}

}  // namespace

double gower_distance(std::span<const double> a, std::span<const double> b,
                      std::span<const FeatureSpec> features,
                      std::span<const double> ranges) {
  if (features.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (std::isnan(a[f]) || std::isnan(b[f])) {
      total += 1.0;
    } else if (features[f].kind == ColumnKind::categorical) {
      total += a[f] == b[f] ? 0.0 : 1.0;
    } else if (ranges[f] > 0.0) {
      total += std::min(1.0, std::abs(a[f] - b[f]) / ranges[f]);
    }
  }
  return total / static_cast<double>(features.size());
}

LimeExplanation lime_explain(const models::Predictor& model, const Frame& background,
                             std::span<const double> instance,
                             const LimeOptions& options, std::size_t instance_index) {
  const auto& features = model.schema().features();
  const std::size_t p = features.size();
  if (instance.size() != p || background.cols() != p) {
    throw SchemaError("instance and background must match the model's features");
  }
  if (options.k_features < 1 || options.k_features > p) {
    throw ConfigError("k_features must lie in [1, " + std::to_string(p) + "]");
  }
  if (options.n_samples < 10 * p) {
    throw ConfigError("n_samples must be at least " + std::to_string(10 * p) +
                      " (10 per feature)");
  }
  const double sigma = options.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(p)));
  if (!(sigma > 0.0)) throw ConfigError("kernel_width must be positive");

  std::vector<double> ranges(p, 0.0);
  for (std::size_t f = 0; f < p; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < background.rows(); ++r) {
      const double v = background(r, f);
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi > lo) ranges[f] = hi - lo;
  }

  const PerturbationSampler sampler(background);
  Rng rng(options.seed);
  const std::size_t n = options.n_samples;
  const Frame z = sampler.sample(rng, n);
  const auto pred = model.predict(z);

  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const double d = gower_distance(z.row(i), instance, features, ranges);
    w(e) = std::exp(-(d * d) / (sigma * sigma));
    y(e) = pred[i];
    for (std::size_t f = 0; f < p; ++f) {
      const double v = z(i, f);
      design(e, static_cast<Eigen::Index>(f)) =
          features[f].kind == ColumnKind::categorical ? (v == instance[f] ? 1.0 : 0.0) : v;
    }
  }
  const double w_sum = w.sum();
  if (!(w_sum > 1e-12 * static_cast<double>(n))) {
    throw ComputeError("all kernel weights are near zero at kernel_width " +
                       format_double(sigma) + "; use a larger kernel_width");
  }

  Frame single(1, p);
  std::copy(instance.begin(), instance.end(), single.row(0).begin());

  LimeExplanation out;
  out.instance = instance_index;
  out.prediction = model.predict(single).front();
  out.kernel_width = sigma;
  out.n_samples = n;

  const double y_mean = w.dot(y) / w_sum;
  const double sst = w.dot((y.array() - y_mean).square().matrix());
  const Eigen::VectorXd sqrt_w = w.cwiseSqrt();

  std::vector<std::size_t> selected;
  WlsFit best_fit;
  for (std::size_t step = 0; step < options.k_features; ++step) {
    std::size_t best = p;
    for (std::size_t f = 0; f < p; ++f) {
      if (std::find(selected.begin(), selected.end(), f) != selected.end()) continue;
      auto trial = selected;
      trial.push_back(f);
      WlsFit fit = weighted_fit(design, y, sqrt_w, trial);
      if (best == p || fit.sse < best_fit.sse) {
        best = f;
        best_fit = std::move(fit);
      }
    }
    selected.push_back(best);
  }

  if (sst == 0.0) {
    out.intercept = y_mean;
    for (std::size_t f : selected) out.weights.push_back({features[f].name, f, 0.0});
    out.fidelity = 1.0;
    return out;
  }
  out.intercept = best_fit.beta(0);
  for (std::size_t k = 0; k < selected.size(); ++k) {
    out.weights.push_back({features[selected[k]].name, selected[k],
                           best_fit.beta(static_cast<Eigen::Index>(k) + 1)});
  }
  out.fidelity = std::clamp(1.0 - best_fit.sse / sst, 0.0, 1.0);
  return out;
}

LimeExplanation lime_explain(const models::Predictor& model,
                             const data::Table& background,
                             const data::Table& instances, std::size_t row,
                             const LimeOptions& options) {
  const Frame bg = model.schema().encode(background);
  const Frame x = model.schema().encode(instances);
  if (row >= x.rows()) throw ConfigError("instance row " + std::to_string(row) + " out of range");
  return lime_explain(model, bg, x.row(row), options, row);
}

nlohmann::json to_json(const LimeExplanation& e) {
  nlohmann::json j;
  j["instance"] = e.instance;
  j["prediction"] = e.prediction;
  j["intercept"] = e.intercept;
  j["kernel_width"] = e.kernel_width;
  j["n_samples"] = e.n_samples;
  j["fidelity"] = e.fidelity;
  auto& weights = j["weights"] = nlohmann::json::array();
  for (const auto& w : e.weights) {
    weights.push_back({{"feature", w.feature}, {"weight", w.weight}});
  }
  return j;
}

void write_lime_csv(const std::vector<LimeExplanation>& explanations, std::ostream& out) {
  out << "instance,feature,weight,intercept,prediction,fidelity,kernel_width\n";
  for (const auto& e : explanations) {
    for (const auto& w : e.weights) {
      out << e.instance << ',' << csv_escape(w.feature) << ',' << format_double(w.weight)
          << ',' << format_double(e.intercept) << ',' << format_double(e.prediction) << ','
          << format_double(e.fidelity) << ',' << format_double(e.kernel_width) << '\n';
    }
  }
}

}  // namespace xai::explain
