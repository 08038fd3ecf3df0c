#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "xai/error.hpp"
#include "xai/fairness.hpp"
#include "xai/format.hpp"

namespace xai::fairness {
namespace {

void check_pair(std::span<const double> scores, std::span<const double> truth) {
  if (scores.size() != truth.size()) {
    throw DataError("scores and truth differ in length (" + std::to_string(scores.size()) +
                    " vs " + std::to_string(truth.size()) + ")");
  }
  for (double t : truth) {
    if (t != 0.0 && t != 1.0) throw DataError("truth must be 0/1");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("scores contain NaN");
  }
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

ConfusionMatrix confusion(std::span<const double> scores, std::span<const double> truth,
                          double threshold) {
  check_pair(scores, truth);
  ConfusionMatrix cm;
  cm.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = truth[i] == 1.0;
    if (predicted && actual) ++cm.tp;
    else if (predicted) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

double mcc(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);
  const double fn = static_cast<double>(cm.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

RocCurve roc_auc(std::span<const double> scores, std::span<const double> truth) {
  check_pair(scores, truth);
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1.0));
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw ComputeError("AUC is undefined when only one class is present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp;
    const std::size_t fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (truth[order[i]] == 1.0) ++tp;
      else ++fp;
    }
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p});
    curve.auc += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0) / 2.0;
  }
  curve.auc /= p * n;
  return curve;
}

GroupMetrics group_metrics(std::string level, std::span<const double> scores,
                           std::span<const double> truth, double threshold) {
  GroupMetrics g;
  g.level = std::move(level);
  g.n = scores.size();
  g.cm = confusion(scores, truth, threshold);
  const auto& cm = g.cm;
  const std::size_t pos = cm.tp + cm.fn;
  const std::size_t neg = cm.tn + cm.fp;
  g.tpr = ratio(cm.tp, pos);
  g.fnr = ratio(cm.fn, pos);
  g.tnr = ratio(cm.tn, neg);
  g.fpr = ratio(cm.fp, neg);
  g.accuracy = ratio(cm.tp + cm.tn, g.n);
  g.precision = ratio(cm.tp, cm.tp + cm.fp);
  g.npv = ratio(cm.tn, cm.tn + cm.fn);
  g.positive_rate = ratio(cm.tp + cm.fp, g.n);
  if (g.tpr && g.tnr) g.demographic_parity_paper = *g.tpr + *g.tnr;
  if (pos > 0 && neg > 0) {
    g.mcc = mcc(cm);
    const auto roc = roc_auc(scores, truth);
    g.auc = roc.auc;
    g.roc = roc.points;
  }
  return g;
}

GroupFairnessReport group_fairness(const models::Predictor& model, const data::Table& data,
                                   const std::string& target, const std::string& group_by,
                                   double threshold) {
  const auto& group = data.column(group_by);
  if (group.kind() != ColumnKind::categorical) {
    throw ConfigError("group_by column '" + group_by +
                      "' is numeric; bin it into a categorical column first");
  }
  const auto truth = models::target_values(data, target);
  for (double t : truth) {
    if (t != 0.0 && t != 1.0) throw DataError("target '" + target + "' must be 0/1");
  }
  const auto scores = model.predict(data);

  GroupFairnessReport report;
  report.group_by = group_by;
  report.threshold = threshold;
  report.overall.threshold = threshold;
  std::vector<std::vector<double>> s(group.levels().size());
  std::vector<std::vector<double>> t(group.levels().size());
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    if (group.is_missing(r)) {
      ++report.excluded_rows;
      continue;
    }
    s[static_cast<std::size_t>(group.code(r))].push_back(scores[r]);
    t[static_cast<std::size_t>(group.code(r))].push_back(truth[r]);
  }
  for (std::size_t l = 0; l < s.size(); ++l) {
    report.groups.push_back(group_metrics(group.levels()[l], s[l], t[l], threshold));
    report.overall += report.groups.back().cm;
  }
  return report;
}

nlohmann::json to_json(const GroupFairnessReport& report) {
  nlohmann::json j;
  j["group_by"] = report.group_by;
  j["threshold"] = report.threshold;
  j["excluded_rows"] = report.excluded_rows;
  const auto& o = report.overall;
  j["overall"] = {{"tp", o.tp}, {"fp", o.fp}, {"tn", o.tn}, {"fn", o.fn}};
  auto& groups = j["groups"] = nlohmann::json::array();
  for (const auto& g : report.groups) {
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& pt : g.roc) roc.push_back({pt.fpr, pt.tpr});
    groups.push_back({{"level", g.level},
                      {"n", g.n},
                      {"tp", g.cm.tp},
                      {"fp", g.cm.fp},
                      {"tn", g.cm.tn},
                      {"fn", g.cm.fn},
                      {"tpr", opt(g.tpr)},
                      {"tnr", opt(g.tnr)},
                      {"fpr", opt(g.fpr)},
                      {"fnr", opt(g.fnr)},
                      {"accuracy", opt(g.accuracy)},
                      {"precision", opt(g.precision)},
                      {"npv", opt(g.npv)},
                      {"demographic_parity_paper", opt(g.demographic_parity_paper)},
                      {"positive_rate", opt(g.positive_rate)},
                      {"mcc", opt(g.mcc)},
                      {"auc", opt(g.auc)},
                      {"roc", std::move(roc)}});
  }
  return j;
}

void write_group_csv(const GroupFairnessReport& report, std::ostream& out) {
  out << "group,n,tp,fp,tn,fn,tpr,tnr,fpr,fnr,accuracy,precision,npv,"
         "demographic_parity_paper,positive_rate,mcc,auc\n";
  for (const auto& g : report.groups) {
    out << csv_escape(g.level) << ',' << g.n << ',' << g.cm.tp << ',' << g.cm.fp << ','
        << g.cm.tn << ',' << g.cm.fn;
    for (const auto* v : {&g.tpr, &g.tnr, &g.fpr, &g.fnr, &g.accuracy, &g.precision, &g.npv,
                          &g.demographic_parity_paper, &g.positive_rate, &g.mcc, &g.auc}) {
      out << ',' << format_optional(*v);
    }
    out << '\n';
  }
}

void write_roc_csv(const GroupFairnessReport& report, std::ostream& out) {
  out << "group,fpr,tpr\n";
  for (const auto& g : report.groups) {
    for (const auto& pt : g.roc) {
      out << csv_escape(g.level) << ',' << format_double(pt.fpr) << ','
          << format_double(pt.tpr) << '\n';
    }
  }
}

}  // namespace xai::fairness
