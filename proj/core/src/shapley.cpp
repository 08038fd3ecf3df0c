#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include "xai/error.hpp"
#include "xai/explain_local.hpp"
#include "xai/format.hpp"

namespace xai::explain {
namespace {

void check_inputs(const models::Predictor& model, const Frame& background,
                  std::span<const double> instance,
                  std::span<const std::size_t> features) {
  const std::size_t p = model.schema().size();
  if (instance.size() != p || background.cols() != p) {
    throw SchemaError("instance and background must match the model's features");
  }
  if (background.rows() == 0) throw DataError("background table has no rows");
  if (features.empty()) throw ConfigError("no features to attribute");
  std::vector<std::size_t> sorted(features.begin(), features.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("duplicate feature in Shapley subset");
  }
  if (sorted.back() >= p) throw ConfigError("feature index out of range");
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Mean prediction over background rows with the instance's values on the
// features selected by `mask`.
double coalition_value(const models::Predictor& model, const Frame& background,
                       std::span<const double> instance,
                       std::span<const std::size_t> features, std::uint32_t mask) {
  Frame x = background;
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (mask & (1u << k)) x.set_column(features[k], instance[features[k]]);
  }
  return mean(model.predict(x));
}

double predict_one(const models::Predictor& model, std::span<const double> instance) {
  Frame single(1, instance.size());
  std::copy(instance.begin(), instance.end(), single.row(0).begin());
  return model.predict(single).front();
}

ShapleyAttribution skeleton(const models::Predictor& model,
                            std::span<const std::size_t> features,
                            std::size_t instance_index, ShapleyMethod method) {
  ShapleyAttribution a;
  a.instance = instance_index;
  a.method = method;
  a.feature_indices.assign(features.begin(), features.end());
  for (std::size_t f : features) a.features.push_back(model.schema()[f].name);
  a.values.assign(features.size(), 0.0);
  a.std_errors.assign(features.size(), 0.0);
  return a;
}

}  // namespace

ShapleyAttribution shapley_exact(const models::Predictor& model, const Frame& background,
                                 std::span<const double> instance,
                                 std::span<const std::size_t> features,
                                 std::size_t instance_index) {
  check_inputs(model, background, instance, features);
  const std::size_t d = features.size();
  if (d > kMaxExactShapleyFeatures) {
    throw ConfigError("exact Shapley supports at most " +
                      std::to_string(kMaxExactShapleyFeatures) + " features (got " +
                      std::to_string(d) + "); use the monte_carlo method");
  }
  const std::uint32_t n_masks = 1u << d;
  std::vector<double> value(n_masks);
  for (std::uint32_t m = 0; m < n_masks; ++m) {
    value[m] = coalition_value(model, background, instance, features, m);
  }

  std::vector<double> factorial(d + 1, 1.0);
  for (std::size_t i = 1; i <= d; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s) {
    weight[s] = factorial[s] * factorial[d - s - 1] / factorial[d];
  }

  ShapleyAttribution a = skeleton(model, features, instance_index, ShapleyMethod::exact);
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint32_t bit = 1u << i;
    double phi = 0.0;
    for (std::uint32_t m = 0; m < n_masks; ++m) {
      if (m & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(m))] * (value[m | bit] - value[m]);
    }
    a.values[i] = phi;
  }
  a.baseline = value[0];
  a.full_value = value[n_masks - 1];
  a.prediction = predict_one(model, instance);
  return a;
}

ShapleyAttribution shapley_mc(const models::Predictor& model, const Frame& background,
                              std::span<const double> instance,
                              std::span<const std::size_t> features,
                              std::size_t n_samples, std::uint64_t seed,
                              std::size_t instance_index) {
  check_inputs(model, background, instance, features);
  if (n_samples < 10) throw ConfigError("monte_carlo Shapley needs n_samples >= 10");
  const std::size_t d = features.size();
  const std::size_t p = instance.size();

  // contrib[k] accumulates per-sample marginal contributions of feature k.
  std::vector<std::vector<double>> contrib(d, std::vector<double>(n_samples));
  Rng rng(seed);
  std::vector<std::size_t> order(d);
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < n_samples; start += kChunk) {
    const std::size_t count = std::min(kChunk, n_samples - start);
    Frame walk(count * (d + 1), p);
    std::vector<std::vector<std::size_t>> orders(count);
    for (std::size_t s = 0; s < count; ++s) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      const std::size_t b = rng.index(background.rows());
      orders[s] = order;
      auto src = background.row(b);
      std::copy(src.begin(), src.end(), walk.row(s * (d + 1)).begin());
      for (std::size_t step = 0; step < d; ++step) {
        auto prev = walk.row(s * (d + 1) + step);
        auto next = walk.row(s * (d + 1) + step + 1);
        std::copy(prev.begin(), prev.end(), next.begin());
        const std::size_t f = features[order[step]];
        next[f] = instance[f];
      }
    }
    const auto pred = model.predict(walk);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t step = 0; step < d; ++step) {
        const std::size_t at = s * (d + 1) + step;
        contrib[orders[s][step]][start + s] = pred[at + 1] - pred[at];
      }
    }
  }

  ShapleyAttribution a = skeleton(model, features, instance_index, ShapleyMethod::monte_carlo);
  a.n_samples = n_samples;
  const double n = static_cast<double>(n_samples);
  for (std::size_t k = 0; k < d; ++k) {
    const double m = mean(contrib[k]);
    double ss = 0.0;
    for (double c : contrib[k]) ss += (c - m) * (c - m);
    a.values[k] = m;
    a.std_errors[k] = std::sqrt(ss / (n - 1.0) / n);
  }
  a.baseline = mean(model.predict(background));
  Frame full = background;
  for (std::size_t f : features) full.set_column(f, instance[f]);
  a.full_value = mean(model.predict(full));
  a.prediction = predict_one(model, instance);
  return a;
}

ShapleyAttribution shapley_explain(const models::Predictor& model,
                                   const data::Table& background,
                                   const data::Table& instances, std::size_t row,
                                   const std::vector<std::string>& features,
                                   ShapleyMethod method, std::size_t n_samples,
                                   std::uint64_t seed) {
  const Frame bg = model.schema().encode(background);
  const Frame x = model.schema().encode(instances);
  if (row >= x.rows()) throw ConfigError("instance row " + std::to_string(row) + " out of range");
  std::vector<std::size_t> idx;
  if (features.empty()) {
    idx.resize(model.schema().size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    for (const auto& name : features) idx.push_back(model.schema().index_of(name));
  }
  if (method == ShapleyMethod::exact) return shapley_exact(model, bg, x.row(row), idx, row);
  return shapley_mc(model, bg, x.row(row), idx, n_samples, seed, row);
}

nlohmann::json to_json(const ShapleyAttribution& a) {
  nlohmann::json j;
  j["instance"] = a.instance;
  j["method"] = a.method == ShapleyMethod::exact ? "exact" : "monte_carlo";
  j["baseline"] = a.baseline;
  j["prediction"] = a.prediction;
  j["full_value"] = a.full_value;
  j["n_samples"] = a.n_samples;
  auto& values = j["values"] = nlohmann::json::array();
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    values.push_back({{"feature", a.features[k]},
                      {"phi", a.values[k]},
                      {"std_error", a.std_errors[k]}});
  }
  return j;
}

void write_shapley_csv(const std::vector<ShapleyAttribution>& attributions,
                       std::ostream& out) {
  out << "instance,method,feature,phi,std_error,baseline,prediction\n";
  for (const auto& a : attributions) {
    const char* method = a.method == ShapleyMethod::exact ? "exact" : "monte_carlo";
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      out << a.instance << ',' << method << ',' << csv_escape(a.features[k]) << ','
          << format_double(a.values[k]) << ',' << format_double(a.std_errors[k]) << ','
          << format_double(a.baseline) << ',' << format_double(a.prediction) << '\n';
    }
  }
}

}  // namespace xai::explain
