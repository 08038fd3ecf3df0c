#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/dataset.hpp"
#include "xai/models.hpp"

namespace xai::tuning {

/// Value lists per GbmParams field, in declaration order. Fields not listed
/// keep the value from `base`. The first declared axis varies slowest.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  models::GbmParams base;
  std::size_t k_folds = 5;
  std::uint64_t seed = 0;
  std::string metric = "rmse";

  std::size_t size() const;
};

// Recognized axis names.
const std::vector<std::string>& grid_axis_names();

// lr {0.01,0.05,0.1,0.3} x depth {1,3,5,7} x min_node {1,3,5}
// x col_sample {0.8,0.9,1} x row_subsample {0.75,0.8,0.9,1}: 576 points.
GridSpec default_grid();

// Axes are read in document order, so pass an ordered_json. Accepts
// {"learning_rate": [..], "max_depth": [..], "base": {..}, "k_folds": 5,
//  "seed": 1} or the same with an explicit "axes" array of
// {"name": .., "values": [..]} objects.
GridSpec grid_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const GridSpec& spec);

std::vector<models::GbmParams> expand_grid(const GridSpec& spec);

struct TrialResult {
  std::size_t index = 0;
  models::GbmParams params;
  double cv_metric = 0.0;
  std::vector<double> per_fold_metrics;
  std::size_t best_iteration = 0;
  std::chrono::duration<double> wall_time{0};
  std::optional<std::string> error;  // set when the trial failed

  bool ok() const noexcept { return !error.has_value(); }
};

/// Cross-validates one configuration. Every fold scores every boosting
/// stage; best_iteration is the first stage minimizing the fold-mean RMSE
/// and cv_metric is the mean of the per-fold RMSEs at that stage.
TrialResult evaluate_trial(const data::Table& train, const std::string& target,
                           const models::GbmParams& params,
                           const std::vector<data::Fold>& folds);

/// Runs every grid point on a fixed pool of `workers` threads. Results come
/// back in expand_grid order; trial i trains with seed
/// derive_seed(spec.seed, i) and all trials share one fold assignment.
/// A failing trial records its error and does not stop the sweep.
std::vector<TrialResult> search(const data::Table& train,
                                const std::string& target,
                                const GridSpec& spec, std::size_t workers);

// Seed used for the folds shared by every trial of a search.
std::uint64_t fold_seed(std::uint64_t spec_seed);
// Seed trial `index` trains with.
std::uint64_t trial_seed(std::uint64_t spec_seed, std::size_t index);

/// Lowest cv_metric among successful trials; earliest wins ties. Throws
/// ComputeError when no trial succeeded.
const TrialResult& best_trial(const std::vector<TrialResult>& results);

// Deterministic columns only (params, metric, folds, best iteration,
// status); timing goes to write_timings_csv.
void write_results_csv(const std::vector<TrialResult>& results,
                       std::ostream& out);
void write_timings_csv(const std::vector<TrialResult>& results,
                       std::ostream& out);

}  // namespace xai::tuning
