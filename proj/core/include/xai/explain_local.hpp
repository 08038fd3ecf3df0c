#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/dataset.hpp"
#include "xai/models.hpp"
#include "xai/random.hpp"

namespace xai::explain {

// --- Perturbations ---------------------------------------------------------

/// Draws each feature independently from its background column (numeric
/// values and categorical levels alike, so levels follow their background
/// frequencies). Features can be restricted to the background values that
/// satisfy a condition.
class PerturbationSampler {
 public:
  explicit PerturbationSampler(const Frame& background);

  std::size_t n_features() const noexcept { return pools_.size(); }

  // Keeps only values passing `keep`; returns false when none remain, in
  // which case the pool is left empty.
  template <typename Pred>
  bool restrict(std::size_t feature, Pred keep) {
    auto& pool = pools_[feature];
    std::erase_if(pool, [&](double v) { return !keep(v); });
    return !pool.empty();
  }
  void fix(std::size_t feature, double value) { pools_[feature] = {value}; }
  bool empty(std::size_t feature) const { return pools_[feature].empty(); }

  void sample(Rng& rng, std::span<double> out) const;
  Frame sample(Rng& rng, std::size_t n) const;

 private:
  std::vector<std::vector<double>> pools_;
};

// --- LIME ------------------------------------------------------------------

struct LimeOptions {
  std::size_t k_features = 5;
  std::size_t n_samples = 5000;
  // Default 0.75 * sqrt(n_features), in units of Gower distance.
  std::optional<double> kernel_width;
  std::uint64_t seed = 0;
};

struct LimeWeight {
  std::string feature;
  std::size_t index = 0;
  double weight = 0.0;
};

/// Sparse weighted linear surrogate around one instance. Numeric features
/// enter the surrogate with their raw values, categorical ones as a 0/1
/// indicator of matching the instance's level. `weights` lists the selected
/// features in selection order.
struct LimeExplanation {
  std::size_t instance = 0;
  double prediction = 0.0;
  std::vector<LimeWeight> weights;
  double intercept = 0.0;
  double kernel_width = 0.0;
  std::size_t n_samples = 0;
  double fidelity = 0.0;  // weighted R^2 of the surrogate, in [0,1]
};

LimeExplanation lime_explain(const models::Predictor& model,
                             const Frame& background,
                             std::span<const double> instance,
                             const LimeOptions& options,
                             std::size_t instance_index = 0);
LimeExplanation lime_explain(const models::Predictor& model,
                             const data::Table& background,
                             const data::Table& instances, std::size_t row,
                             const LimeOptions& options);

// Mean over features of range-normalized absolute difference (numeric) or
// level mismatch (categorical). Zero-range features contribute 0.
double gower_distance(std::span<const double> a, std::span<const double> b,
                      std::span<const FeatureSpec> features,
                      std::span<const double> ranges);

nlohmann::json to_json(const LimeExplanation& e);
void write_lime_csv(const std::vector<LimeExplanation>& explanations,
                    std::ostream& out);

// --- Shapley -----------------------------------------------------------------

enum class ShapleyMethod { exact, monte_carlo };

inline constexpr std::size_t kMaxExactShapleyFeatures = 12;

/// Attributions for the chosen features. The coalition value of S is the
/// mean prediction over background rows with the instance's values on S.
/// `full_value` is the coalition value of all chosen features, which equals
/// `prediction` when every model feature is chosen; the values sum to
/// full_value - baseline.
struct ShapleyAttribution {
  std::size_t instance = 0;
  ShapleyMethod method = ShapleyMethod::exact;
  std::vector<std::string> features;
  std::vector<std::size_t> feature_indices;
  std::vector<double> values;
  std::vector<double> std_errors;  // zeros for the exact method
  double baseline = 0.0;
  double prediction = 0.0;
  double full_value = 0.0;
  std::size_t n_samples = 0;
};

ShapleyAttribution shapley_exact(const models::Predictor& model,
                                 const Frame& background,
                                 std::span<const double> instance,
                                 std::span<const std::size_t> features,
                                 std::size_t instance_index = 0);

/// Sampled-permutation estimator: each sample draws a feature ordering and
/// a background row, then switches the instance's values in one feature at
/// a time, crediting each feature with the change in prediction.
ShapleyAttribution shapley_mc(const models::Predictor& model,
                              const Frame& background,
                              std::span<const double> instance,
                              std::span<const std::size_t> features,
                              std::size_t n_samples, std::uint64_t seed,
                              std::size_t instance_index = 0);

ShapleyAttribution shapley_explain(const models::Predictor& model,
                                   const data::Table& background,
                                   const data::Table& instances,
                                   std::size_t row,
                                   const std::vector<std::string>& features,
                                   ShapleyMethod method,
                                   std::size_t n_samples = 0,
                                   std::uint64_t seed = 0);

nlohmann::json to_json(const ShapleyAttribution& a);
void write_shapley_csv(const std::vector<ShapleyAttribution>& attributions,
                       std::ostream& out);

// --- Anchors ---------------------------------------------------------------

enum class Relation { equal, less_equal, greater, interval };

/// interval means lower < x <= upper.
struct Predicate {
  std::size_t feature = 0;
  std::string feature_name;
  Relation relation = Relation::equal;
  double lower = 0.0;
  double upper = 0.0;
  std::string level;  // for equality on a categorical feature

  bool holds(double x) const;
  std::string describe() const;
};

struct AnchorStep {
  std::size_t n_predicates = 0;
  double precision = 0.0;
  double precision_lower_bound = 0.0;
  double coverage = 0.0;
};

struct AnchorRule {
  std::size_t instance = 0;
  int label = 0;  // the instance's predicted class
  std::vector<Predicate> predicates;
  double precision = 0.0;
  double precision_lower_bound = 0.0;
  double coverage = 0.0;
  std::size_t n_samples = 0;
  double tau = 0.0;
  bool satisfied = false;  // lower bound reached tau
  std::vector<AnchorStep> steps;  // one entry per rule size, empty rule first

  bool matches(std::span<const double> row) const;
};

struct AnchorOptions {
  double tau = 0.95;
  std::size_t n_samples_per_eval = 2000;
  double threshold = 0.5;  // class label is prediction >= threshold
  double delta = 0.05;     // one-sided Hoeffding confidence 1 - delta
  std::uint64_t seed = 0;
};

/// Greedy bottom-up anchor. Candidates are one predicate per feature:
/// equality with the instance's level, or the background quartile interval
/// holding the instance's value. Each step adds the candidate with the
/// highest estimated precision until the Hoeffding lower bound reaches tau;
/// if every candidate is used first, the full rule comes back unsatisfied.
AnchorRule anchor_explain(const models::Predictor& model,
                          const Frame& background,
                          std::span<const double> instance,
                          const AnchorOptions& options,
                          std::size_t instance_index = 0);
AnchorRule anchor_explain(const models::Predictor& model,
                          const data::Table& background,
                          const data::Table& instances, std::size_t row,
                          const AnchorOptions& options);

// Candidate predicates anchor_explain chooses from, in feature order.
std::vector<Predicate> anchor_candidates(const models::Schema& schema,
                                         const Frame& background,
                                         std::span<const double> instance);

struct AnchorMetrics {
  std::optional<double> precision;  // empty when no sample can satisfy the rule
  double coverage = 0.0;
};

AnchorMetrics anchor_metrics(const AnchorRule& rule,
                             const models::Predictor& model,
                             const Frame& background, std::size_t n_samples,
                             std::uint64_t seed, double threshold = 0.5);

double coverage(std::span<const Predicate> predicates, const Frame& background);

nlohmann::json to_json(const AnchorRule& rule);
// case, precision, coverage (one row per anchor, cases numbered from 1).
void write_anchor_table_csv(const std::vector<AnchorRule>& rules,
                            std::ostream& out);

}  // namespace xai::explain
