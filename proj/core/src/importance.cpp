#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "xai/error.hpp"
#include "xai/explain_global.hpp"
#include "xai/format.hpp"
#include "xai/parallel.hpp"
#include "xai/random.hpp"

namespace xai::explain {

std::vector<FeatureImportance> ImportanceReport::by_rank() const {
  auto out = features;
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return out;
}

ImportanceReport permutation_importance(const models::Predictor& model,
                                        const data::Table& data,
                                        const std::string& target,
                                        std::size_t n_repeats, std::uint64_t seed,
                                        std::size_t workers) {
  if (n_repeats < 1) throw ConfigError("n_repeats must be at least 1");
  if (data.n_rows() == 0) throw DataError("permutation importance needs rows");
  const Frame x = model.schema().encode(data);
  const auto truth = models::target_values(data, target);
  const double baseline = models::rmse(model.predict(x), truth);

  const std::size_t p = x.cols();
  ImportanceReport report;
  report.n_repeats = n_repeats;
  report.seed = seed;
  report.features.resize(p);
  parallel_for(p, workers, [&](std::size_t f) {
    Frame shuffled = x;
    const std::vector<double> original = x.column(f);
    std::vector<double> metrics(n_repeats);
    for (std::size_t rep = 0; rep < n_repeats; ++rep) {
      std::vector<double> column = original;
      Rng rng(derive_seed(seed, f, rep));
      rng.shuffle(std::span<double>(column));
      for (std::size_t r = 0; r < shuffled.rows(); ++r) shuffled(r, f) = column[r];
      metrics[rep] = models::rmse(model.predict(shuffled), truth);
    }
    const double mean =
        std::accumulate(metrics.begin(), metrics.end(), 0.0) / static_cast<double>(n_repeats);
    double var = 0.0;
    for (double m : metrics) var += (m - mean) * (m - mean);
    FeatureImportance& fi = report.features[f];
    fi.feature = model.schema()[f].name;
    fi.baseline = baseline;
    fi.permuted = mean;
    fi.importance = mean - baseline;
    fi.stddev = n_repeats > 1 ? std::sqrt(var / static_cast<double>(n_repeats - 1)) : 0.0;
  });

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.features[a].importance > report.features[b].importance;
  });
  for (std::size_t i = 0; i < p; ++i) report.features[order[i]].rank = i + 1;
  return report;
}

void write_importance_csv(const ImportanceReport& report, std::ostream& out) {
  out << "rank,feature,importance,baseline_rmse,permuted_rmse,permuted_sd\n";
  for (const auto& f : report.by_rank()) {
    out << f.rank << ',' << csv_escape(f.feature) << ',' << format_double(f.importance)
        << ',' << format_double(f.baseline) << ',' << format_double(f.permuted) << ','
        << format_double(f.stddev) << '\n';
  }
}

nlohmann::json to_json(const ImportanceReport& report) {
  nlohmann::json j;
  j["n_repeats"] = report.n_repeats;
  j["seed"] = report.seed;
  auto& features = j["features"] = nlohmann::json::array();
  for (const auto& f : report.by_rank()) {
    features.push_back({{"feature", f.feature},
                        {"rank", f.rank},
                        {"importance", f.importance},
                        {"baseline", f.baseline},
                        {"permuted", f.permuted},
                        {"permuted_sd", f.stddev}});
  }
  return j;
}

}  // namespace xai::explain
