#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/dataset.hpp"
#include "xai/frame.hpp"
#include "xai/tree.hpp"

namespace xai::models {

/// Ordered feature list a model was trained on. Encoding a table looks up
/// columns by name, so extra columns (the target, ids) are ignored.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FeatureSpec> features);

  // Every column of `table` except those named in `exclude`.
  static Schema from_table(const data::Table& table,
                           std::span<const std::string> exclude = {});
  static Schema from_table(const data::Table& table,
                           std::span<const std::string> features,
                           std::string_view target);

  const std::vector<FeatureSpec>& features() const noexcept {
    return features_;
  }
  std::size_t size() const noexcept { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws SchemaError
  std::vector<std::string> names() const;

  /// Throws SchemaError naming the first absent or mistyped column.
  /// Categorical cells are re-coded by level text; levels the model never
  /// saw encode as NaN.
  Frame encode(const data::Table& table) const;
  data::Table decode(const Frame& frame) const;

  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& j);

  bool operator==(const Schema&) const = default;

 private:
  std::vector<FeatureSpec> features_;
};

enum class OutputKind { regression, probability };

/// Black-box scoring contract every explainer consumes: one real number per
/// row, deterministic, and safe to call concurrently.
class Predictor {
 public:
  Predictor(Schema schema, OutputKind output)
      : schema_(std::move(schema)), output_(output) {}
  virtual ~Predictor() = default;

  const Schema& schema() const noexcept { return schema_; }
  OutputKind output() const noexcept { return output_; }

  std::vector<double> predict(const data::Table& rows) const {
    return predict(schema_.encode(rows));
  }
  std::vector<double> predict(const Frame& rows) const;

  virtual std::string type_name() const = 0;
  // Model document; throws ConfigError for models that cannot be saved.
  virtual nlohmann::json to_json() const;

 protected:
  virtual std::vector<double> score(const Frame& rows) const = 0;
  nlohmann::json json_header() const;

 private:
  Schema schema_;
  OutputKind output_;
};

/// Wraps a plain function of one encoded row; handy for analytic models.
class FunctionPredictor final : public Predictor {
 public:
  using RowFn = std::function<double(std::span<const double>)>;

  FunctionPredictor(Schema schema, RowFn fn,
                    OutputKind output = OutputKind::regression)
      : Predictor(std::move(schema), output), fn_(std::move(fn)) {}

  std::string type_name() const override { return "function"; }

 protected:
  std::vector<double> score(const Frame& rows) const override;

 private:
  RowFn fn_;
};

// Schema with `names` numeric features.
Schema numeric_schema(std::span<const std::string> names);
Schema numeric_schema(std::initializer_list<std::string> names);

// --- GLM -------------------------------------------------------------------

enum class GlmFamily { linear, logistic };

struct GlmOptions {
  GlmFamily family = GlmFamily::linear;
  double l2 = 0.0;
  std::size_t max_iter = 100;
  double tol = 1e-8;
  std::vector<std::string> features;  // empty: every non-target column
};

/// Linear or logistic regression. Categorical features are one-hot encoded
/// against their first level.
class GlmModel final : public Predictor {
 public:
  GlmModel(Schema schema, GlmFamily family, double intercept,
           std::vector<double> coefficients);

  GlmFamily family() const noexcept { return family_; }
  double intercept() const noexcept { return intercept_; }
  // One per design column, named by coefficient_names().
  const std::vector<double>& coefficients() const noexcept { return coef_; }
  std::vector<std::string> coefficient_names() const;
  std::size_t iterations() const noexcept { return iterations_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

  std::string type_name() const override { return "glm"; }
  nlohmann::json to_json() const override;
  static std::unique_ptr<GlmModel> from_json(const nlohmann::json& j);

  // Design row for one encoded feature row (without the intercept).
  void design_row(std::span<const double> row, std::span<double> out) const;
  std::size_t design_width() const;

 protected:
  std::vector<double> score(const Frame& rows) const override;

 private:
  friend GlmModel train_glm(const data::Table&, const std::string&,
                            const GlmOptions&);
  GlmFamily family_;
  double intercept_;
  std::vector<double> coef_;
  std::size_t iterations_ = 0;
  double gradient_norm_ = 0.0;
};

GlmModel train_glm(const data::Table& train, const std::string& target,
                   const GlmOptions& options = {});

// --- Single tree -----------------------------------------------------------

struct TreeParams {
  std::size_t max_depth = 64;
  std::size_t min_node_size = 1;
  std::vector<std::string> features;
};

class TreeModel final : public Predictor {
 public:
  TreeModel(Schema schema, RegressionTree tree,
            OutputKind output = OutputKind::regression)
      : Predictor(std::move(schema), output), tree_(std::move(tree)) {}

  const RegressionTree& tree() const noexcept { return tree_; }

  std::string type_name() const override { return "tree"; }
  nlohmann::json to_json() const override;
  static std::unique_ptr<TreeModel> from_json(const nlohmann::json& j);

 protected:
  std::vector<double> score(const Frame& rows) const override;

 private:
  RegressionTree tree_;
};

TreeModel train_tree(const data::Table& train, const std::string& target,
                     const TreeParams& params = {});

// --- Gradient boosting ----------------------------------------------------

enum class GbmLoss { squared, logistic };

std::string to_string(GbmLoss loss);
GbmLoss parse_gbm_loss(std::string_view name);

struct GbmParams {
  std::size_t n_trees = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_node_size = 1;
  double col_sample = 1.0;
  double row_subsample = 1.0;
  GbmLoss loss = GbmLoss::squared;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  bool operator==(const GbmParams&) const = default;
};

nlohmann::json to_json(const GbmParams& params);
GbmParams gbm_params_from_json(const nlohmann::json& j,
                               const GbmParams& defaults = {});

/// Additive ensemble: init_score + learning_rate * sum of trees, passed
/// through the logistic link for logistic loss. Predictions use the first
/// active_stages() trees (all of them unless truncated).
class GbmModel final : public Predictor {
 public:
  GbmModel(Schema schema, GbmParams params, double init_score,
           std::vector<RegressionTree> trees);

  const GbmParams& params() const noexcept { return params_; }
  double init_score() const noexcept { return init_score_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  std::size_t n_stages() const noexcept { return trees_.size(); }

  std::size_t active_stages() const noexcept { return active_stages_; }
  void set_active_stages(std::size_t m);  // 1..n_stages()

  // Predictions after the first m trees (m = 0 gives the initial score).
  std::vector<double> predict_stage(const Frame& rows, std::size_t m) const;
  // rmse(after m trees) for m = 1..n_stages(), computed incrementally.
  std::vector<double> staged_rmse(const Frame& rows,
                                  std::span<const double> truth) const;
  // Mean training loss after each stage, recorded during fitting.
  const std::vector<double>& training_loss() const noexcept {
    return training_loss_;
  }

  std::string type_name() const override { return "gbm"; }
  nlohmann::json to_json() const override;
  static std::unique_ptr<GbmModel> from_json(const nlohmann::json& j);

 protected:
  std::vector<double> score(const Frame& rows) const override;

 private:
  friend GbmModel fit_gbm(const Frame&, Schema, std::span<const double>,
                          const GbmParams&);
  double link(double raw) const;

  GbmParams params_;
  double init_score_;
  std::vector<RegressionTree> trees_;
  std::size_t active_stages_;
  std::vector<double> training_loss_;
};

/// `features` empty means every column except the target; listing the
/// target among them is a ConfigError.
GbmModel train_gbm(const data::Table& train, const std::string& target,
                   const GbmParams& params,
                   std::span<const std::string> features = {});
GbmModel fit_gbm(const Frame& x, Schema schema, std::span<const double> y,
                 const GbmParams& params);

// --- Metrics ---------------------------------------------------------------

double rmse(std::span<const double> predictions, std::span<const double> truth);

// Numeric target values, or level codes of a two-level categorical target.
// Missing target cells are a DataError.
std::vector<double> target_values(const data::Table& table,
                                  const std::string& target);

// truth - prediction, indexed by row.
std::vector<double> residuals(const Predictor& model, const data::Table& rows,
                              const std::string& target);

// --- Persistence -----------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

std::unique_ptr<Predictor> model_from_json(const nlohmann::json& j);
void save_model(const Predictor& model, const std::filesystem::path& path);
std::unique_ptr<Predictor> load_model(const std::filesystem::path& path);

}  // namespace xai::models
