#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "xai/error.hpp"
#include "xai/explain_local.hpp"

using namespace xai;
using namespace xai::explain;
using models::FunctionPredictor;
using models::numeric_schema;
using fixtures::random_tree;
using oracles::shapley_by_orderings;

namespace {

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

// Solves the 3x3 weighted normal equations for y ~ 1 + x1 + x2.
std::array<double, 3> wls_oracle(const Frame& z, const std::vector<double>& y,
                                 const std::vector<double>& w) {
  double a[3][4] = {};
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double row[3] = {1.0, z(i, 0), z(i, 1)};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += w[i] * row[r] * row[c];
      a[r][3] += w[i] * row[r] * y[i];
    }
  }
  for (int k = 0; k < 3; ++k) {
    for (int r = k + 1; r < 3; ++r) {
      const double m = a[r][k] / a[k][k];
      for (int c = k; c < 4; ++c) a[r][c] -= m * a[k][c];
    }
  }
  std::array<double, 3> beta{};
  for (int k = 2; k >= 0; --k) {
    double s = a[k][3];
    for (int c = k + 1; c < 3; ++c) s -= a[k][c] * beta[c];
    beta[k] = s / a[k][k];
  }
  return beta;
}

}  // namespace

TEST(Perturbation, DrawsFromBackgroundAndRespectsConditions) {
  const auto t = fixtures::uniform_table(50, 2, 1);
  const Frame bg = fixtures::to_frame(t);
  PerturbationSampler sampler(bg);
  EXPECT_TRUE(sampler.restrict(0, [](double v) { return v > 0.5; }));
  Rng rng(3);
  const Frame z = sampler.sample(rng, 200);
  const auto col0 = bg.column(0);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    EXPECT_GT(z(r, 0), 0.5);
    EXPECT_NE(std::find(col0.begin(), col0.end(), z(r, 0)), col0.end());
  }
  EXPECT_FALSE(sampler.restrict(1, [](double v) { return v > 2.0; }));
  EXPECT_TRUE(sampler.empty(1));
}

TEST(Lime, RecoversLinearWeights) {
  const auto t = fixtures::uniform_table(1000, 2, 2);
  const Frame bg = fixtures::to_frame(t);
  const FunctionPredictor f(numeric_schema({"x1", "x2"}),
                            [](auto r) { return 2 * r[0] - r[1] + 5; });
  LimeOptions options;
  options.k_features = 2;
  options.n_samples = 5000;
  options.seed = 4;
  const std::vector<double> x{0.3, 0.6};
  const auto e = lime_explain(f, bg, x, options);
  ASSERT_EQ(e.weights.size(), 2u);
  std::map<std::string, double> w;
  for (const auto& lw : e.weights) w[lw.feature] = lw.weight;
  EXPECT_NEAR(w["x1"], 2.0, 0.1);
  EXPECT_NEAR(w["x2"], -1.0, 0.05);
  EXPECT_NEAR(e.intercept, 5.0, 1e-6);
  EXPECT_NEAR(e.fidelity, 1.0, 1e-9);
  EXPECT_NEAR(e.kernel_width, 0.75 * std::sqrt(2.0), 1e-15);
}

TEST(Lime, MatchesWeightedLeastSquaresOracle) {
  const auto t = fixtures::uniform_table(800, 2, 3);
  const Frame bg = fixtures::to_frame(t);
  const FunctionPredictor f(numeric_schema({"x1", "x2"}), [](auto r) {
    return std::sin(5 * r[0]) + r[1] * r[1];
  });
  LimeOptions options;
  options.k_features = 2;
  options.n_samples = 2000;
  options.kernel_width = 0.4;
  options.seed = 17;
  const std::vector<double> x{0.5, 0.2};
  const auto e = lime_explain(f, bg, x, options);

  // Rebuild the sample and kernel weights independently.
  Rng rng(options.seed);
  const Frame z = PerturbationSampler(bg).sample(rng, options.n_samples);
  const auto y = f.predict(z);
  double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
  for (std::size_t r = 0; r < bg.rows(); ++r) {
    for (int c = 0; c < 2; ++c) {
      lo[c] = std::min(lo[c], bg(r, c));
      hi[c] = std::max(hi[c], bg(r, c));
    }
  }
  std::vector<double> w(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double d = (std::abs(z(i, 0) - x[0]) / (hi[0] - lo[0]) +
                      std::abs(z(i, 1) - x[1]) / (hi[1] - lo[1])) / 2;
    w[i] = std::exp(-d * d / (0.4 * 0.4));
  }
  const auto beta = wls_oracle(z, y, w);
  EXPECT_NEAR(e.intercept, beta[0], 1e-8);
  for (const auto& lw : e.weights) EXPECT_NEAR(lw.weight, beta[1 + lw.index], 1e-8);
  EXPECT_GE(e.fidelity, 0.0);
  EXPECT_LE(e.fidelity, 1.0);
}

TEST(Lime, ConstantModelHasZeroWeights) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(100, 3, 4));
  const FunctionPredictor c(numeric_schema({"x1", "x2", "x3"}), [](auto) { return 7.0; });
  LimeOptions options;
  options.k_features = 2;
  options.n_samples = 300;
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto e = lime_explain(c, bg, x, options);
  ASSERT_EQ(e.weights.size(), 2u);
  for (const auto& w : e.weights) EXPECT_EQ(w.weight, 0.0);
  EXPECT_EQ(e.intercept, 7.0);
}

TEST(Lime, SparsitySelectsActiveFeature) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(500, 4, 5));
  const FunctionPredictor f(numeric_schema({"x1", "x2", "x3", "x4"}),
                            [](auto r) { return 4 * r[2] + 0.1 * r[0]; });
  LimeOptions options;
  options.k_features = 1;
  options.n_samples = 1000;
  const std::vector<double> x{0.5, 0.5, 0.5, 0.5};
  const auto e = lime_explain(f, bg, x, options);
  ASSERT_EQ(e.weights.size(), 1u);
  EXPECT_EQ(e.weights[0].feature, "x3");
}

TEST(Lime, NarrowerKernelTracksLocalGradient) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(2000, 2, 6));
  const FunctionPredictor f(numeric_schema({"x1", "x2"}), [](auto r) {
    return (r[0] < 0.5 ? r[0] : 0.5 + 4 * (r[0] - 0.5)) + r[1];
  });
  const std::vector<double> x{0.2, 0.5};
  double previous = INFINITY;
  for (double sigma : {1.0, 0.5, 0.25}) {
    LimeOptions options;
    options.k_features = 2;
    options.n_samples = 5000;
    options.kernel_width = sigma;
    options.seed = 8;
    const auto e = lime_explain(f, bg, x, options);
    double err = 0.0;
    for (const auto& w : e.weights) err += std::abs(w.weight - 1.0);
    EXPECT_LT(err, previous);
    previous = err;
  }
}

TEST(Lime, CategoricalFeaturesUseMatchIndicator) {
  const data::Table t({data::Column::categorical("c", {"a", "b", "c", "a", "b", "c", "a", "b",
                                                       "c", "a"}),
                       data::Column::numeric("x", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})});
  const FunctionPredictor f(models::Schema::from_table(t),
                            [](auto r) { return (r[0] == 1.0 ? 3.0 : 0.0) + r[1]; });
  LimeOptions options;
  options.k_features = 2;
  options.n_samples = 400;
  const auto e = lime_explain(f, t, t, 1, options);
  for (const auto& w : e.weights) {
    if (w.feature == "c") EXPECT_NEAR(w.weight, 3.0, 1e-8);
    if (w.feature == "x") EXPECT_NEAR(w.weight, 1.0, 1e-8);
  }
}

TEST(Lime, Errors) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(100, 2, 7));
  const FunctionPredictor f(numeric_schema({"x1", "x2"}), [](auto r) { return r[0]; });
  const std::vector<double> x{0.5, 0.5};
  LimeOptions options;
  options.k_features = 2;
  options.n_samples = 19;
  EXPECT_THROW(lime_explain(f, bg, x, options), ConfigError);
  options.n_samples = 100;
  options.k_features = 3;
  EXPECT_THROW(lime_explain(f, bg, x, options), ConfigError);
  options.k_features = 1;
  options.kernel_width = 1e-6;
  EXPECT_THROW(lime_explain(f, bg, x, options), ComputeError);
}

TEST(Lime, DeterministicGivenSeed) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(100, 3, 7));
  const FunctionPredictor f(numeric_schema({"x1", "x2", "x3"}),
                            [](auto r) { return r[0] * r[1] - r[2]; });
  const std::vector<double> x{0.2, 0.4, 0.6};
  LimeOptions options;
  options.k_features = 2;
  options.n_samples = 500;
  options.seed = 5;
  EXPECT_EQ(to_json(lime_explain(f, bg, x, options)), to_json(lime_explain(f, bg, x, options)));
}

TEST(Gower, MixedFeatures) {
  const std::vector<FeatureSpec> features{{"n", ColumnKind::numeric, {}},
                                          {"c", ColumnKind::categorical, {"a", "b"}}};
  const std::vector<double> ranges{4.0, 0.0};
  const std::vector<double> a{1.0, 0.0}, b{3.0, 1.0};
  EXPECT_DOUBLE_EQ(gower_distance(a, b, features, ranges), (0.5 + 1.0) / 2);
}

TEST(Shapley, AdditiveSingleBackgroundRow) {
  const Frame bg(1, 2, 0.0);
  const FunctionPredictor f(numeric_schema({"x1", "x2"}), [](auto r) { return r[0] + r[1]; });
  const std::vector<double> x{1.0, 1.0};
  const auto a = shapley_exact(f, bg, x, all_features(2));
  EXPECT_NEAR(a.values[0], 1.0, 1e-12);
  EXPECT_NEAR(a.values[1], 1.0, 1e-12);
}

TEST(Shapley, SymmetricProduct) {
  Frame bg(2, 2);
  bg(0, 0) = 0.2; bg(0, 1) = 0.7;
  bg(1, 0) = 0.7; bg(1, 1) = 0.2;
  const FunctionPredictor f(numeric_schema({"x1", "x2"}), [](auto r) { return r[0] * r[1]; });
  const std::vector<double> x{0.5, 0.5};
  const auto a = shapley_exact(f, bg, x, all_features(2));
  EXPECT_NEAR(a.values[0], a.values[1], 1e-12);
}

TEST(Shapley, ExactMatchesAllOrderings) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto tree = random_tree(seed);
    const Frame bg = fixtures::to_frame(fixtures::uniform_table(25, 4, seed + 50));
    const auto x = fixtures::to_frame(fixtures::uniform_table(1, 4, seed + 99));
    const auto a = shapley_exact(tree, bg, x.row(0), all_features(4));
    const auto oracle = shapley_by_orderings(tree, bg, x.row(0));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a.values[i], oracle[i], 1e-9);
    const double sum = std::accumulate(a.values.begin(), a.values.end(), 0.0);
    EXPECT_NEAR(sum, a.prediction - a.baseline, 1e-9);
    EXPECT_NEAR(a.full_value, a.prediction, 1e-12);
  }
}

TEST(Shapley, DummyFeatureGetsZero) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(30, 3, 1));
  const FunctionPredictor f(numeric_schema({"x1", "x2", "x3"}),
                            [](auto r) { return r[0] * r[2] + r[0]; });
  const std::vector<double> x{0.9, 0.1, 0.4};
  EXPECT_NEAR(shapley_exact(f, bg, x, all_features(3)).values[1], 0.0, 1e-12);
  const auto mc = shapley_mc(f, bg, x, all_features(3), 2000, 3);
  EXPECT_LE(std::abs(mc.values[1]), 3 * mc.std_errors[1] + 1e-12);
}

TEST(Shapley, SubsetSumsToFullValue) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(30, 3, 2));
  const FunctionPredictor f(numeric_schema({"x1", "x2", "x3"}),
                            [](auto r) { return r[0] * r[1] + r[2]; });
  const std::vector<double> x{0.9, 0.1, 0.4};
  const std::vector<std::size_t> subset{0, 2};
  const auto a = shapley_exact(f, bg, x, subset);
  EXPECT_NEAR(a.values[0] + a.values[1], a.full_value - a.baseline, 1e-12);
  EXPECT_EQ(a.features, (std::vector<std::string>{"x1", "x3"}));
}

TEST(Shapley, MonteCarloAgreesWithExact) {
  const auto tree = random_tree(7);
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(40, 4, 70));
  const auto x = fixtures::to_frame(fixtures::uniform_table(1, 4, 71));
  const auto exact = shapley_exact(tree, bg, x.row(0), all_features(4));
  const auto mc = shapley_mc(tree, bg, x.row(0), all_features(4), 10000, 5);
  double se_sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LE(std::abs(mc.values[i] - exact.values[i]), 3 * mc.std_errors[i]);
    se_sum += mc.std_errors[i];
  }
  const double sum = std::accumulate(mc.values.begin(), mc.values.end(), 0.0);
  EXPECT_LE(std::abs(sum - (mc.prediction - mc.baseline)), 3 * se_sum);
}

TEST(Shapley, ConstantModelMonteCarlo) {
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(10, 2, 3));
  const FunctionPredictor c(numeric_schema({"x1", "x2"}), [](auto) { return 2.0; });
  const std::vector<double> x{0.5, 0.5};
  const auto a = shapley_mc(c, bg, x, all_features(2), 50, 1);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.values[i], 0.0);
    EXPECT_EQ(a.std_errors[i], 0.0);
  }
}

TEST(Shapley, Errors) {
  const std::size_t p = 13;
  const Frame bg(2, p, 0.0);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p; ++i) names.push_back("f" + std::to_string(i));
  const FunctionPredictor f(numeric_schema(names), [](auto r) { return r[0]; });
  const std::vector<double> x(p, 1.0);
  try {
    shapley_exact(f, bg, x, all_features(p));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("monte_carlo"), std::string::npos);
  }
  EXPECT_THROW(shapley_mc(f, bg, x, all_features(p), 5, 1), ConfigError);
  const std::vector<std::size_t> dup{0, 0};
  EXPECT_THROW(shapley_exact(f, bg, x, dup), ConfigError);
}

TEST(Shapley, DeterministicGivenSeed) {
  const auto tree = random_tree(3);
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(20, 4, 8));
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(shapley_mc(tree, bg, x, all_features(4), 300, 9).values,
            shapley_mc(tree, bg, x, all_features(4), 300, 9).values);
}

class AnchorStump : public ::testing::Test {
 protected:
  AnchorStump()
      : bg(fixtures::to_frame(fixtures::uniform_table(2000, 3, 21))),
        stump(numeric_schema({"x1", "x2", "x3"}),
              [](auto r) { return r[0] > 0.5 ? 1.0 : 0.0; }, models::OutputKind::probability) {}

  Frame bg;
  FunctionPredictor stump;
};

TEST_F(AnchorStump, FindsUpperIntervalOnX1) {
  const std::vector<double> x{0.9, 0.3, 0.6};
  AnchorOptions options;
  options.seed = 2;
  const auto rule = anchor_explain(stump, bg, x, options);
  ASSERT_TRUE(rule.satisfied);
  ASSERT_EQ(rule.predicates.size(), 1u);
  const auto& p = rule.predicates[0];
  EXPECT_EQ(p.feature_name, "x1");
  EXPECT_EQ(p.relation, Relation::greater);
  EXPECT_GT(p.lower, 0.5);
  EXPECT_EQ(rule.precision, 1.0);
  EXPECT_TRUE(rule.matches(x));
  // Coverage oracle: count background rows above the cut.
  std::size_t hits = 0;
  for (std::size_t r = 0; r < bg.rows(); ++r) hits += bg(r, 0) > p.lower;
  EXPECT_DOUBLE_EQ(rule.coverage, static_cast<double>(hits) / 2000.0);
  EXPECT_NEAR(rule.coverage, 0.25, 0.01);

  const auto metrics = anchor_metrics(rule, stump, bg, 10000, 99);
  ASSERT_TRUE(metrics.precision.has_value());
  EXPECT_NEAR(*metrics.precision, 1.0, 0.02);
}

TEST_F(AnchorStump, TinyTauGivesEmptyAnchor) {
  const std::vector<double> x{0.9, 0.3, 0.6};
  AnchorOptions options;
  options.tau = 0.01;
  const auto rule = anchor_explain(stump, bg, x, options);
  EXPECT_TRUE(rule.predicates.empty());
  EXPECT_TRUE(rule.satisfied);
  EXPECT_EQ(rule.coverage, 1.0);
}

TEST_F(AnchorStump, CoverageShrinksAsPredicatesAccumulate) {
  const FunctionPredictor noisy(numeric_schema({"x1", "x2", "x3"}), [](auto r) {
    return std::sin(40 * r[0] * r[1] + 7 * r[2]) > 0 ? 1.0 : 0.0;
  });
  const std::vector<double> x{0.4, 0.8, 0.1};
  AnchorOptions options;
  options.tau = 0.99;
  const auto rule = anchor_explain(noisy, bg, x, options);
  ASSERT_EQ(rule.steps.size(), rule.predicates.size() + 1);
  for (std::size_t k = 1; k < rule.steps.size(); ++k) {
    EXPECT_LE(rule.steps[k].coverage, rule.steps[k - 1].coverage);
    const std::span<const Predicate> prefix(rule.predicates.data(), k);
    EXPECT_DOUBLE_EQ(coverage(prefix, bg), rule.steps[k].coverage);
  }
  EXPECT_TRUE(rule.matches(x));
  EXPECT_EQ(rule.satisfied, rule.precision_lower_bound >= options.tau);
}

TEST_F(AnchorStump, MetricsEdgeCases) {
  AnchorRule everything;
  everything.label = 1;
  EXPECT_EQ(anchor_metrics(everything, stump, bg, 100, 1).coverage, 1.0);

  AnchorRule contradiction;
  Predicate le;
  le.feature = 0;
  le.relation = Relation::less_equal;
  le.upper = 0.3;
  Predicate gt;
  gt.feature = 0;
  gt.relation = Relation::greater;
  gt.lower = 0.3;
  contradiction.predicates = {le, gt};
  const auto m = anchor_metrics(contradiction, stump, bg, 100, 1);
  EXPECT_EQ(m.coverage, 0.0);
  EXPECT_FALSE(m.precision.has_value());
}

TEST_F(AnchorStump, CandidatesHoldForInstance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = fixtures::to_frame(fixtures::uniform_table(1, 3, seed + 500));
    for (const auto& p : anchor_candidates(stump.schema(), bg, x.row(0))) {
      EXPECT_TRUE(p.holds(x(0, p.feature)));
    }
  }
}

TEST_F(AnchorStump, Errors) {
  const std::vector<double> x{0.9, 0.3, 0.6};
  AnchorOptions options;
  options.tau = 1.0;
  EXPECT_THROW(anchor_explain(stump, bg, x, options), ConfigError);
  options.tau = 0.0;
  EXPECT_THROW(anchor_explain(stump, bg, x, options), ConfigError);
}

TEST(Anchor, CategoricalEquality) {
  std::vector<std::string> c(300);
  std::vector<double> n(300);
  Rng rng(5);
  for (std::size_t i = 0; i < 300; ++i) {
    c[i] = rng.bernoulli(0.5) ? "yes" : "no";
    n[i] = rng.uniform();
  }
  const data::Table t({data::Column::categorical("flag", c), data::Column::numeric("n", n)});
  const FunctionPredictor f(models::Schema::from_table(t), [](auto r) { return r[0]; },
                            models::OutputKind::probability);
  std::size_t yes_row = 0;
  while (c[yes_row] != "yes") ++yes_row;
  const auto rule = anchor_explain(f, t, t, yes_row, AnchorOptions{});
  ASSERT_EQ(rule.predicates.size(), 1u);
  EXPECT_EQ(rule.predicates[0].describe(), "flag = yes");
}
