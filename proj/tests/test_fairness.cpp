#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "xai/error.hpp"
#include "xai/fairness.hpp"
#include "xai/synth.hpp"

using namespace xai;
using namespace xai::fairness;

using oracles::pairwise_auc;
using oracles::pearson;

TEST(Confusion, PerfectClassifier) {
  const std::vector<double> y{1, 0, 1, 1, 0};
  const auto cm = confusion(y, y, 0.5);
  EXPECT_EQ(cm.fp, 0u);
  EXPECT_EQ(cm.fn, 0u);
  EXPECT_EQ(cm.tp, 3u);
  EXPECT_EQ(cm.total(), 5u);
}

TEST(Confusion, AllZeroScores) {
  const std::vector<double> s(10, 0.0);
  std::vector<double> y(10, 0.0);
  for (std::size_t i = 0; i < 5; ++i) y[i] = 1.0;
  const auto cm = confusion(s, y, 0.5);
  EXPECT_EQ(cm.tn, 5u);
  EXPECT_EQ(cm.fn, 5u);
}

TEST(Confusion, MatchesCountingOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(100), y(100);
    for (std::size_t i = 0; i < 100; ++i) {
      s[i] = rng.uniform();
      y[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    const double t = rng.uniform();
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      const bool pos = s[i] >= t;
      tp += pos && y[i] == 1;
      fp += pos && y[i] == 0;
      tn += !pos && y[i] == 0;
      fn += !pos && y[i] == 1;
    }
    const auto cm = confusion(s, y, t);
    EXPECT_EQ(cm.tp, tp);
    EXPECT_EQ(cm.fp, fp);
    EXPECT_EQ(cm.tn, tn);
    EXPECT_EQ(cm.fn, fn);
  }
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion(std::vector<double>{1, 0}, std::vector<double>{1}, 0.5), DataError);
  EXPECT_THROW(confusion(std::vector<double>{1}, std::vector<double>{2}, 0.5), DataError);
}

TEST(Mcc, ConventionsAndExtremes) {
  EXPECT_DOUBLE_EQ(mcc({5, 0, 5, 0}), 1.0);
  EXPECT_DOUBLE_EQ(mcc({0, 5, 0, 5}), -1.0);
  EXPECT_EQ(mcc({5, 5, 0, 0}), 0.0);
}

TEST(Mcc, EqualsPearsonOfLabels) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + rng.index(200);
    std::vector<double> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.bernoulli(0.5) ? 1 : 0;
      pred[i] = rng.bernoulli(0.3 + 0.4 * truth[i]) ? 1 : 0;
    }
    const auto cm = confusion(pred, truth, 0.5);
    if (mcc(cm) == 0.0 && (cm.tp + cm.fp == 0 || cm.tn + cm.fn == 0)) continue;
    EXPECT_NEAR(mcc(cm), pearson(pred, truth), 1e-9);
  }
}

TEST(Roc, PerfectSeparation) {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  const std::vector<double> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(s, y).auc, 1.0);
}

TEST(Roc, MatchesPairwiseOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + rng.index(150);
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
      // Coarse scores force ties.
      s[i] = std::round((rng.uniform() + 0.3 * y[i]) * 10) / 10;
    }
    y[0] = 1;
    y[1] = 0;
    const auto roc = roc_auc(s, y);
    EXPECT_NEAR(roc.auc, pairwise_auc(s, y), 1e-9);
    EXPECT_EQ(roc.points.front().fpr, 0.0);
    EXPECT_EQ(roc.points.front().tpr, 0.0);
    EXPECT_EQ(roc.points.back().fpr, 1.0);
    EXPECT_EQ(roc.points.back().tpr, 1.0);
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      EXPECT_GE(roc.points[k].fpr, roc.points[k - 1].fpr);
      EXPECT_GE(roc.points[k].tpr, roc.points[k - 1].tpr);
    }
    // Strictly increasing transforms leave AUC unchanged.
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    EXPECT_DOUBLE_EQ(roc_auc(t, y).auc, roc.auc);
  }
}

TEST(Roc, IndependentScoresNearHalf) {
  Rng rng(4);
  std::vector<double> s(10000), y(10000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    y[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  EXPECT_NEAR(roc_auc(s, y).auc, 0.5, 0.02);
}

TEST(Roc, SingleClassIsError) {
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), ComputeError);
}

TEST(GroupMetrics, PerfectGroupParityIsTwo) {
  const std::vector<double> s{0.9, 0.1, 0.8, 0.2};
  const std::vector<double> y{1, 0, 1, 0};
  const auto g = group_metrics("a", s, y, 0.5);
  EXPECT_EQ(*g.demographic_parity_paper, 2.0);
  EXPECT_EQ(*g.positive_rate, 0.5);
  EXPECT_EQ(*g.auc, 1.0);
  EXPECT_EQ(*g.tpr + *g.fnr, 1.0);
  EXPECT_EQ(*g.tnr + *g.fpr, 1.0);
}

TEST(GroupMetrics, MissingClassIsFlagged) {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<double> y{1, 1};
  const auto g = group_metrics("a", s, y, 0.5);
  EXPECT_FALSE(g.auc.has_value());
  EXPECT_FALSE(g.mcc.has_value());
  EXPECT_FALSE(g.tnr.has_value());
  EXPECT_FALSE(g.demographic_parity_paper.has_value());
  EXPECT_TRUE(g.tpr.has_value());
}

TEST(GroupFairness, NoiseGroupAndSummation) {
  synth::SyntheticSpec spec;
  spec.generator = "noise-group";
  spec.n_rows = 6000;
  spec.noise = 0.0;
  spec.seed = 3;
  const auto data = synth::generate(spec);
  const models::FunctionPredictor f(models::Schema::from_table(data.table, std::vector<std::string>{"y"}),
                                    [](auto r) { return r[0]; },
                                    models::OutputKind::probability);
  const auto report = group_fairness(f, data.table, "y", "group", 0.5);
  ASSERT_EQ(report.groups.size(), 3u);
  EXPECT_NEAR(*report.groups[2].auc, 0.5, 0.03);
  EXPECT_GT(*report.groups[0].auc, 0.99);
  ConfusionMatrix sum;
  for (const auto& g : report.groups) sum += g.cm;
  const auto y = models::target_values(data.table, "y");
  const auto global = confusion(f.predict(data.table), y, 0.5);
  EXPECT_EQ(sum, global);
  EXPECT_EQ(report.overall, global);

  std::ostringstream groups, roc;
  write_group_csv(report, groups);
  write_roc_csv(report, roc);
  EXPECT_EQ(groups.str().substr(0, 13), "group,n,tp,fp");
  EXPECT_EQ(roc.str().substr(0, 14), "group,fpr,tpr\n");
  EXPECT_TRUE(to_json(report)["groups"][0]["auc"].is_number());
}

TEST(GroupFairness, UndefinedMetricsPrintAsNA) {
  const data::Table t({data::Column::categorical("g", {"a", "a", "b", "b"}),
                       data::Column::numeric("s", {0.9, 0.1, 0.8, 0.7}),
                       data::Column::numeric("y", {1, 0, 1, 1})});
  const models::FunctionPredictor f(models::numeric_schema({"s"}), [](auto r) { return r[0]; });
  const auto report = group_fairness(f, t, "y", "g", 0.5);
  EXPECT_FALSE(report.groups[1].auc.has_value());
  std::ostringstream out;
  write_group_csv(report, out);
  EXPECT_NE(out.str().find("NA"), std::string::npos);
  EXPECT_TRUE(to_json(report)["groups"][1]["auc"].is_null());
}

TEST(GroupFairness, NumericGroupIsConfigError) {
  const auto t = fixtures::with_target(fixtures::uniform_table(20, 2, 1), "y",
                                      [](auto r) { return r[0] > 0.5 ? 1.0 : 0.0; });
  const models::FunctionPredictor f(models::numeric_schema({"x1", "x2"}), [](auto r) { return r[0]; });
  EXPECT_THROW(group_fairness(f, t, "y", "x2", 0.5), ConfigError);
}
