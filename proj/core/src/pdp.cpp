#include <algorithm>
#include <cmath>
#include <ostream>

#include "xai/error.hpp"
#include "xai/explain_global.hpp"
#include "xai/format.hpp"
#include "xai/parallel.hpp"
#include "xai/random.hpp"

namespace xai::explain {
namespace {

std::vector<double> observed(const Frame& x, std::size_t feature) {
  std::vector<double> v;
  v.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (!std::isnan(x(r, feature))) v.push_back(x(r, feature));
  }
  return v;
}

// curves[i][g]: prediction for row i with the feature forced to grid[g].
std::vector<std::vector<double>> ice_matrix(const models::Predictor& model,
                                            const Frame& x, std::size_t feature,
                                            const std::vector<double>& grid,
                                            std::size_t workers) {
  std::vector<std::vector<double>> curves(x.rows(), std::vector<double>(grid.size()));
  parallel_for(grid.size(), workers, [&](std::size_t g) {
    Frame forced = x;
    forced.set_column(feature, grid[g]);
    const auto pred = model.predict(forced);
    for (std::size_t i = 0; i < pred.size(); ++i) curves[i][g] = pred[i];
  });
  return curves;
}

std::vector<double> column_mean(const std::vector<std::vector<double>>& curves,
                                std::size_t width) {
  std::vector<double> mean(width, 0.0);
  for (const auto& c : curves) {
    for (std::size_t g = 0; g < width; ++g) mean[g] += c[g];
  }
  for (double& m : mean) m /= static_cast<double>(curves.size());
  return mean;
}

struct Grid {
  std::vector<double> values;
  std::vector<std::string> labels;
  std::vector<double> rug;
};

Grid make_grid(const models::Predictor& model, const Frame& x, std::size_t feature,
               std::size_t grid_size) {
  const FeatureSpec& spec = model.schema()[feature];
  Grid grid;
  if (spec.kind == ColumnKind::categorical) {
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
      grid.values.push_back(static_cast<double>(l));
      grid.labels.push_back(spec.levels[l]);
    }
    if (grid.values.empty()) throw ConfigError("feature '" + spec.name + "' has no levels");
    return grid;
  }
  if (grid_size < 2) throw ConfigError("grid_size must be at least 2");
  auto values = observed(x, feature);
  if (values.empty()) throw DataError("feature '" + spec.name + "' has no values");
  grid.values = quantile_grid(values, grid_size);
  grid.rug = quantiles(std::move(values), {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  return grid;
}

}  // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::pdp: return "pdp";
    case ProfileKind::ice: return "ice";
    case ProfileKind::ice_centered: return "ice_centered";
    case ProfileKind::ale1: return "ale1";
    case ProfileKind::ale2: return "ale2";
  }
  return "unknown";
}

std::vector<double> quantiles(std::vector<double> values,
                              const std::vector<double>& probs) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) throw DataError("quantiles of an empty sample");
  std::sort(values.begin(), values.end());
  const double last = static_cast<double>(values.size() - 1);
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) {
    const double h = last * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    out.push_back(values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  return out;
}

std::vector<double> quantile_grid(std::vector<double> values, std::size_t grid_size) {
  std::vector<double> probs(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k) {
    probs[k] = static_cast<double>(k) / static_cast<double>(grid_size - 1);
  }
  auto grid = quantiles(std::move(values), probs);
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Profile pdp_on_grid(const models::Predictor& model, const Frame& data,
                    std::size_t feature, const std::vector<double>& grid,
                    std::size_t workers) {
  if (data.rows() == 0) throw DataError("partial dependence needs rows");
  Profile profile;
  profile.kind = ProfileKind::pdp;
  profile.features = {model.schema()[feature].name};
  profile.grid = grid;
  profile.curves = {column_mean(ice_matrix(model, data, feature, grid, workers), grid.size())};
  profile.curve_ids = {0};
  return profile;
}

Profile pdp(const models::Predictor& model, const data::Table& data,
            const std::string& feature, std::size_t grid_size, std::size_t workers) {
  const std::size_t f = model.schema().index_of(feature);
  const Frame x = model.schema().encode(data);
  const Grid grid = make_grid(model, x, f, grid_size);
  Profile profile = pdp_on_grid(model, x, f, grid.values, workers);
  profile.grid_labels = grid.labels;
  profile.rug = grid.rug;
  return profile;
}

Profile ice(const models::Predictor& model, const data::Table& data,
            const std::string& feature, const IceOptions& options) {
  const std::size_t f = model.schema().index_of(feature);
  const Frame all = model.schema().encode(data);
  if (all.rows() == 0) throw DataError("ICE needs rows");
  const Grid grid = make_grid(model, all, f, options.grid_size);

  std::vector<std::size_t> rows(all.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  std::size_t take = std::min(all.rows(), kDefaultIceRows);
  if (options.sample) {
    if (*options.sample > all.rows() || *options.sample == 0) {
      throw ConfigError("ICE sample must lie in [1, " + std::to_string(all.rows()) + "]");
    }
    take = *options.sample;
  }
  if (take < rows.size()) {
    Rng rng(options.seed);
    rng.shuffle(std::span<std::size_t>(rows));
    rows.resize(take);
    std::sort(rows.begin(), rows.end());
  }
  const Frame x = take < all.rows() ? all.select_rows(rows) : all;

  Profile profile;
  profile.kind = options.centered ? ProfileKind::ice_centered : ProfileKind::ice;
  profile.features = {feature};
  profile.grid = grid.values;
  profile.grid_labels = grid.labels;
  profile.rug = grid.rug;
  profile.curves = ice_matrix(model, x, f, grid.values, options.workers);
  profile.curve_ids = rows;
  if (options.centered) {
    for (auto& curve : profile.curves) {
      const double anchor = curve.front();
      for (double& v : curve) v -= anchor;
    }
  }
  return profile;
}

void write_profile_csv(const Profile& profile, std::ostream& out) {
  const bool surface = profile.kind == ProfileKind::ale2;
  std::string name = profile.features.empty() ? "" : profile.features.front();
  for (std::size_t i = 1; i < profile.features.size(); ++i) name += ":" + profile.features[i];
  out << "feature,grid_value," << (surface ? "grid2_value," : "") << "curve_id,value\n";
  for (std::size_t c = 0; c < profile.curves.size(); ++c) {
    for (std::size_t g = 0; g < profile.grid.size(); ++g) {
      out << csv_escape(name) << ',';
      out << (profile.grid_labels.empty() ? format_double(profile.grid[g])
                                          : csv_escape(profile.grid_labels[g]))
          << ',';
      if (surface) out << format_double(profile.grid2[profile.curve_ids[c]]) << ',';
      out << profile.curve_ids[c] << ',' << format_double(profile.curves[c][g]) << '\n';
    }
  }
}

nlohmann::json to_json(const Profile& profile) {
  nlohmann::json j;
  j["kind"] = to_string(profile.kind);
  j["features"] = profile.features;
  j["grid"] = profile.grid;
  if (!profile.grid_labels.empty()) j["grid_labels"] = profile.grid_labels;
  if (!profile.grid2.empty()) j["grid2"] = profile.grid2;
  j["curve_ids"] = profile.curve_ids;
  j["curves"] = profile.curves;
  if (!profile.bin_counts.empty()) j["bin_counts"] = profile.bin_counts;
  if (!profile.cell_counts.empty()) j["cell_counts"] = profile.cell_counts;
  if (!profile.rug.empty()) j["rug"] = profile.rug;
  return j;
}

}  // namespace xai::explain
