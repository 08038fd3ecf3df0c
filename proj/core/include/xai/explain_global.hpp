#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/dataset.hpp"
#include "xai/models.hpp"

namespace xai::explain {

enum class ProfileKind { pdp, ice, ice_centered, ale1, ale2 };

std::string to_string(ProfileKind kind);

/// Curve family over a grid. For ale2 the surface is stored as one curve per
/// point of `grid2`, each running over `grid`.
struct Profile {
  ProfileKind kind = ProfileKind::pdp;
  std::vector<std::string> features;
  std::vector<double> grid;
  std::vector<std::string> grid_labels;  // level names on categorical grids
  std::vector<double> grid2;
  std::vector<std::vector<double>> curves;
  std::vector<std::size_t> curve_ids;  // row index (ICE) or grid2 index
  std::vector<std::size_t> bin_counts;  // ALE bin populations
  std::vector<std::vector<std::size_t>> cell_counts;  // ALE2 [bin1][bin2]
  std::vector<double> rug;  // deciles of the feature
};

// Long format: feature, grid_value, curve_id, value (plus grid2_value for
// ale2 surfaces).
void write_profile_csv(const Profile& profile, std::ostream& out);
nlohmann::json to_json(const Profile& profile);

struct FeatureImportance {
  std::string feature;
  double baseline = 0.0;
  double permuted = 0.0;   // mean over repeats
  double importance = 0.0; // permuted - baseline
  double stddev = 0.0;     // of the permuted metric across repeats
  std::size_t rank = 0;    // 1 = most important
};

struct ImportanceReport {
  std::vector<FeatureImportance> features;  // schema order
  std::size_t n_repeats = 0;
  std::uint64_t seed = 0;

  std::vector<FeatureImportance> by_rank() const;
};

void write_importance_csv(const ImportanceReport& report, std::ostream& out);
nlohmann::json to_json(const ImportanceReport& report);

/// RMSE increase after shuffling each feature column within the data,
/// averaged over n_repeats shuffles.
ImportanceReport permutation_importance(const models::Predictor& model,
                                        const data::Table& data,
                                        const std::string& target,
                                        std::size_t n_repeats,
                                        std::uint64_t seed,
                                        std::size_t workers = 1);

// Type-7 quantiles at `probs` of the non-missing values.
std::vector<double> quantiles(std::vector<double> values,
                              const std::vector<double>& probs);

// grid_size equally spaced quantile levels in [0,1], duplicates removed.
std::vector<double> quantile_grid(std::vector<double> values,
                                  std::size_t grid_size);

/// Mean prediction with `feature` forced to each grid value. Numeric grids
/// are quantile_grid(grid_size); categorical grids are the level set.
Profile pdp(const models::Predictor& model, const data::Table& data,
            const std::string& feature, std::size_t grid_size,
            std::size_t workers = 1);

// Same computation on an explicit grid (encoded values).
Profile pdp_on_grid(const models::Predictor& model, const Frame& data,
                    std::size_t feature, const std::vector<double>& grid,
                    std::size_t workers = 1);

struct IceOptions {
  std::size_t grid_size = 20;
  // Rows to draw; default is every row up to 500, then a seeded subsample.
  std::optional<std::size_t> sample;
  bool centered = false;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

inline constexpr std::size_t kDefaultIceRows = 500;

/// One curve per sampled row. The mean of the plain curves over all rows is
/// the pdp curve on the same grid, bit for bit.
Profile ice(const models::Predictor& model, const data::Table& data,
            const std::string& feature, const IceOptions& options);

/// First-order ALE on quantile bins. Each bin's local effect is the mean of
/// f(upper edge) - f(lower edge) over its rows; the accumulated curve is
/// evaluated at the bin edges and centered so the population-weighted mean
/// of bin-midpoint values is zero.
Profile ale_first_order(const models::Predictor& model,
                        const data::Table& data, const std::string& feature,
                        std::size_t n_bins);
Profile ale_first_order(const models::Predictor& model, const Frame& data,
                        std::size_t feature, std::size_t n_bins);

/// Second-order ALE surface over a grid of quantile cells, with both
/// first-order margins removed and the result centered. Cells without rows
/// take the effect of the nearest populated cell.
Profile ale_second_order(const models::Predictor& model,
                         const data::Table& data, const std::string& feature1,
                         const std::string& feature2, std::size_t n_bins);
Profile ale_second_order(const models::Predictor& model, const Frame& data,
                         std::size_t feature1, std::size_t feature2,
                         std::size_t n_bins);

}  // namespace xai::explain
