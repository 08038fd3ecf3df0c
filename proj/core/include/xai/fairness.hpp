#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/dataset.hpp"
#include "xai/models.hpp"

namespace xai::fairness {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double threshold = 0.5;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

// Predicted positive when score >= threshold. Truth must be 0/1.
ConfusionMatrix confusion(std::span<const double> scores,
                          std::span<const double> truth, double threshold);

// Zero when any marginal of the denominator is zero.
double mcc(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// One point per distinct score, thresholds descending, ties grouped; AUC
/// by the trapezoid rule. Throws ComputeError if only one class is present.
RocCurve roc_auc(std::span<const double> scores, std::span<const double> truth);

struct GroupMetrics {
  std::string level;
  std::size_t n = 0;
  ConfusionMatrix cm;
  // Empty when the denominator is zero or a class is absent.
  std::optional<double> tpr, tnr, fpr, fnr, accuracy, precision, npv;
  std::optional<double> demographic_parity_paper;  // tpr + tnr
  std::optional<double> positive_rate;             // share predicted positive
  std::optional<double> mcc;
  std::optional<double> auc;
  std::vector<RocPoint> roc;
};

struct GroupFairnessReport {
  std::string group_by;
  double threshold = 0.5;
  std::vector<GroupMetrics> groups;  // dataset level order
  ConfusionMatrix overall;
  std::size_t excluded_rows = 0;  // rows with a missing group value
};

/// Per-level metrics of the model's thresholded scores. group_by must be
/// categorical (ConfigError otherwise); target must be 0/1.
GroupFairnessReport group_fairness(const models::Predictor& model,
                                   const data::Table& data,
                                   const std::string& target,
                                   const std::string& group_by,
                                   double threshold = 0.5);

GroupMetrics group_metrics(std::string level, std::span<const double> scores,
                           std::span<const double> truth, double threshold);

nlohmann::json to_json(const GroupFairnessReport& report);
void write_group_csv(const GroupFairnessReport& report, std::ostream& out);
void write_roc_csv(const GroupFairnessReport& report, std::ostream& out);

}  // namespace xai::fairness
