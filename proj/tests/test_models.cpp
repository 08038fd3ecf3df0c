#include <cmath>
#include <filesystem>
#include <numeric>
#include <thread>

#include <gtest/gtest.h>

#include "support.hpp"
#include "xai/error.hpp"
#include "xai/models.hpp"

using namespace xai;
using namespace xai::models;
using data::Column;
using data::Table;

namespace {

Table step_table(std::size_t n, std::uint64_t seed) {
  return fixtures::with_target(fixtures::uniform_table(n, 2, seed), "y",
                              [](auto r) { return r[0] > 0.5 ? 1.0 : 0.0; });
}

}  // namespace

TEST(Rmse, ForcedArithmetic) {
  EXPECT_EQ(rmse(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{.5, .5, .5, .5}, std::vector<double>{0, 1, 0, 1}), 0.5);
  EXPECT_THROW(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), ComputeError);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), ComputeError);
}

TEST(Glm, ExactLinearSolve) {
  const Table t = fixtures::with_target(fixtures::uniform_table(50, 1, 3), "y",
                                       [](auto r) { return 2.0 * r[0] + 1.0; });
  const auto m = train_glm(t, "y");
  ASSERT_EQ(m.coefficients().size(), 1u);
  EXPECT_NEAR(m.coefficients()[0], 2.0, 1e-6);
  EXPECT_NEAR(m.intercept(), 1.0, 1e-6);
}

TEST(Glm, ConstantZeroTarget) {
  const Table t = fixtures::with_target(fixtures::uniform_table(30, 2, 3), "y",
                                       [](auto) { return 0.0; });
  const auto m = train_glm(t, "y");
  EXPECT_NEAR(m.intercept(), 0.0, 1e-12);
  for (double c : m.coefficients()) EXPECT_NEAR(c, 0.0, 1e-12);
}

TEST(Glm, LogisticSeparable) {
  const Table t = fixtures::with_target(fixtures::uniform_table(200, 2, 5), "y",
                                       [](auto r) { return r[0] + r[1] > 1.0 ? 1.0 : 0.0; });
  GlmOptions options;
  options.family = GlmFamily::logistic;
  options.l2 = 0.0;
  const auto m = train_glm(t, "y", options);
  const auto p = m.predict(t);
  const auto y = target_values(t, "y");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_GE(p[i], 0.0);
    EXPECT_LE(p[i], 1.0);
    correct += (p[i] >= 0.5) == (y[i] == 1.0);
  }
  EXPECT_EQ(correct, p.size());
}

TEST(Glm, LogisticRidgeStationary) {
  // Independent check of the penalised score equations.
  const Table t = fixtures::with_target(fixtures::uniform_table(200, 2, 5), "y",
                                       [](auto r) { return r[0] + r[1] > 1.0 ? 1.0 : 0.0; });
  GlmOptions options;
  options.family = GlmFamily::logistic;
  options.l2 = 0.1;
  const auto m = train_glm(t, "y", options);
  const auto p = m.predict(t);
  const auto y = target_values(t, "y");
  const auto x1 = t.column("x1").values();
  const auto x2 = t.column("x2").values();
  double g0 = 0, g1 = 0, g2 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double eta = m.intercept() + m.coefficients()[0] * x1[i] + m.coefficients()[1] * x2[i];
    const double mu = 1.0 / (1.0 + std::exp(-eta));
    EXPECT_NEAR(mu, p[i], 1e-12);
    g0 += (mu - y[i]) / 200.0;
    g1 += (mu - y[i]) * x1[i] / 200.0;
    g2 += (mu - y[i]) * x2[i] / 200.0;
  }
  EXPECT_NEAR(g0, 0.0, 1e-8);
  EXPECT_NEAR(g1 + 0.1 * m.coefficients()[0], 0.0, 1e-8);
  EXPECT_NEAR(g2 + 0.1 * m.coefficients()[1], 0.0, 1e-8);
}

TEST(Glm, Errors) {
  const Table t = fixtures::with_target(fixtures::uniform_table(20, 1, 1), "y",
                                       [](auto r) { return r[0] * 3; });
  GlmOptions logistic;
  logistic.family = GlmFamily::logistic;
  EXPECT_THROW(train_glm(t, "y", logistic), DataError);
  // x2 duplicates x1: the design is singular without a penalty.
  const Table dup = t.with_column(t.column("x1").with_name("x2"));
  EXPECT_THROW(train_glm(dup, "y"), FitError);
  GlmOptions ridge;
  ridge.l2 = 0.5;
  EXPECT_NO_THROW(train_glm(dup, "y", ridge));
}

TEST(Glm, OneHotAgainstFirstLevel) {
  const Table t({Column::categorical("c", {"a", "b", "c", "a", "b", "c"}),
                 Column::numeric("y", {1, 3, 6, 1, 3, 6})});
  const auto m = train_glm(t, "y");
  EXPECT_EQ(m.coefficient_names(), (std::vector<std::string>{"c=b", "c=c"}));
  EXPECT_NEAR(m.intercept(), 1.0, 1e-9);
  EXPECT_NEAR(m.coefficients()[0], 2.0, 1e-9);
  EXPECT_NEAR(m.coefficients()[1], 5.0, 1e-9);
}

TEST(Tree, InterpolatesDistinctRows) {
  Rng rng(4);
  const Table x = fixtures::uniform_table(300, 3, 8);
  std::vector<double> y(300);
  for (double& v : y) v = rng.normal();
  const Table t = x.with_column(Column::numeric("y", y));
  const auto m = train_tree(t, "y");
  EXPECT_EQ(rmse(m.predict(t), y), 0.0);
}

TEST(Tree, InterpolatesWithCategoricalFeature) {
  const Table t({Column::categorical("c", {"u", "v", "w", "u", "v", "w"}),
                 Column::numeric("x", {0, 0, 0, 1, 1, 1}),
                 Column::numeric("y", {5, 1, 3, 2, 8, 4})});
  const auto m = train_tree(t, "y");
  EXPECT_EQ(m.predict(t), target_values(t, "y"));
}

TEST(Tree, TieBreaksToLowestFeature) {
  const Table base = fixtures::uniform_table(40, 1, 2);
  const Table t = fixtures::with_target(base.with_column(base.column("x1").with_name("x2")), "y",
                                       [](auto r) { return r[0] > 0.5 ? 1.0 : 0.0; });
  TreeParams params;
  params.max_depth = 1;
  const auto m = train_tree(t, "y", params);
  EXPECT_EQ(m.tree().nodes()[0].feature, 0);
}

TEST(Tree, DuplicatedBatchGivesDuplicatedPredictions) {
  const Table t = step_table(100, 1);
  const auto m = train_tree(t, "y");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < 100; ++i) rows.push_back(i);
  for (std::size_t i = 0; i < 100; ++i) rows.push_back(i);
  const auto p = m.predict(t.select_rows(rows));
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(p[i], p[i + 100]);
}

TEST(Gbm, LearnsStepFunction) {
  const Table t = step_table(500, 7);
  GbmParams params;
  params.n_trees = 200;
  params.learning_rate = 0.1;
  params.max_depth = 1;
  const auto m = train_gbm(t, "y", params);
  EXPECT_LE(rmse(m.predict(t), target_values(t, "y")), 0.05);
}

TEST(Gbm, OneStageEqualsOneTree) {
  Rng rng(9);
  const Table x = fixtures::uniform_table(120, 2, 10);
  std::vector<double> y(120);
  for (double& v : y) v = rng.normal();
  const Table t = x.with_column(Column::numeric("y", y));
  GbmParams params;
  params.n_trees = 1;
  params.learning_rate = 1.0;
  params.max_depth = 64;
  const auto gbm = train_gbm(t, "y", params);
  const auto tree = train_tree(t, "y");
  const auto rg = residuals(gbm, t, "y");
  const auto rt = residuals(tree, t, "y");
  for (std::size_t i = 0; i < rg.size(); ++i) EXPECT_NEAR(rg[i], rt[i], 1e-12);
}

TEST(Gbm, TrainingLossNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Table t = fixtures::with_target(fixtures::uniform_table(300, 3, seed), "y", [](auto r) {
      return std::sin(6 * r[0]) + r[1] * r[2];
    });
    GbmParams params;
    params.n_trees = 60;
    params.max_depth = 2;
    params.seed = seed;
    const auto m = train_gbm(t, "y", params);
    const auto& loss = m.training_loss();
    ASSERT_EQ(loss.size(), 60u);
    for (std::size_t i = 1; i < loss.size(); ++i) EXPECT_LE(loss[i], loss[i - 1] + 1e-12);
  }
}

TEST(Gbm, ZeroLearningRateIsConstant) {
  const Table t = step_table(200, 3);
  GbmParams params;
  params.n_trees = 10;
  params.learning_rate = 0.0;
  const auto y = target_values(t, "y");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  for (double v : train_gbm(t, "y", params).predict(t)) EXPECT_NEAR(v, mean, 1e-12);

  params.loss = GbmLoss::logistic;
  const auto m = train_gbm(t, "y", params);
  for (double v : m.predict(t)) EXPECT_NEAR(v, mean, 1e-12);
  EXPECT_NEAR(m.init_score(), std::log(mean / (1 - mean)), 1e-12);
}

TEST(Gbm, LogisticOutputsAreProbabilities) {
  const Table t = step_table(300, 5);
  GbmParams params;
  params.loss = GbmLoss::logistic;
  params.n_trees = 50;
  for (double v : train_gbm(t, "y", params).predict(t)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Gbm, StagedPredictionsAndTruncation) {
  const Table t = step_table(200, 2);
  GbmParams params;
  params.n_trees = 20;
  params.row_subsample = 0.8;
  params.col_sample = 0.5;
  params.seed = 3;
  auto m = train_gbm(t, "y", params);
  const Frame x = m.schema().encode(t);
  const auto y = target_values(t, "y");
  const auto staged = m.staged_rmse(x, y);
  ASSERT_EQ(staged.size(), 20u);
  for (std::size_t s : {1u, 7u, 20u}) {
    EXPECT_NEAR(staged[s - 1], rmse(m.predict_stage(x, s), y), 1e-12);
  }
  m.set_active_stages(7);
  EXPECT_EQ(m.predict(x), m.predict_stage(x, 7));
  EXPECT_THROW(m.set_active_stages(0), ConfigError);
  EXPECT_THROW(m.set_active_stages(21), ConfigError);
}

TEST(Gbm, DeterministicGivenSeed) {
  const Table t = step_table(200, 2);
  GbmParams params;
  params.n_trees = 15;
  params.row_subsample = 0.7;
  params.col_sample = 0.5;
  params.seed = 42;
  const auto a = train_gbm(t, "y", params);
  const auto b = train_gbm(t, "y", params);
  EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(Gbm, ConfigErrors) {
  const Table t = step_table(50, 1);
  const std::vector<std::string> with_target{"x1", "y"};
  EXPECT_THROW(train_gbm(t, "y", {}, with_target), ConfigError);
  EXPECT_THROW(train_gbm(t.select_rows(std::vector<std::size_t>{}), "y", {}), DataError);
  GbmParams bad;
  bad.n_trees = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.col_sample = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.row_subsample = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.min_node_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  GbmParams big;
  big.min_node_size = 50;
  EXPECT_THROW(train_gbm(t, "y", big), ConfigError);
}

TEST(Predictor, SchemaMismatchNamesColumn) {
  const Table t = step_table(50, 1);
  const auto m = train_tree(t, "y");
  const Table missing({t.column("x1"), t.column("y")});
  try {
    m.predict(missing);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("x2"), std::string::npos);
  }
}

TEST(Predictor, PredictionCountMatchesRows) {
  const Table t = step_table(3000, 1);
  GbmParams params;
  params.n_trees = 5;
  EXPECT_EQ(train_gbm(t, "y", params).predict(t).size(), 3000u);
}

TEST(Predictor, ConcurrentCallsMatchSequential) {
  const Table t = step_table(400, 6);
  GbmParams params;
  params.n_trees = 30;
  const auto m = train_gbm(t, "y", params);
  const auto expected = m.predict(t);
  std::vector<std::vector<double>> got(6);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < got.size(); ++i) {
    threads.emplace_back([&, i] { got[i] = m.predict(t); });
  }
  for (auto& th : threads) th.join();
  for (const auto& g : got) EXPECT_EQ(g, expected);
}

TEST(Schema, EncodeDecodeRoundTrip) {
  const Table t({Column::categorical("c", {"x", "y", "", "z"}, {false, false, true, false}),
                 Column::numeric("n", {1, 2, 3, 4})});
  const auto schema = Schema::from_table(t);
  EXPECT_EQ(schema.decode(schema.encode(t)), t);
}

TEST(Schema, UnseenLevelsEncodeAsMissing) {
  const Table train({Column::categorical("c", {"a", "b"})});
  const Table other({Column::categorical("c", {"b", "q"})});
  const Frame x = Schema::from_table(train).encode(other);
  EXPECT_EQ(x(0, 0), 1.0);
  EXPECT_TRUE(std::isnan(x(1, 0)));
}

TEST(Residuals, PerfectAndConstantModels) {
  const Table t = step_table(50, 1);
  const auto tree = train_tree(t, "y");
  for (double r : residuals(tree, t, "y")) EXPECT_EQ(r, 0.0);
  const FunctionPredictor zero(numeric_schema({"x1", "x2"}), [](auto) { return 0.0; });
  for (double r : residuals(zero, t, "y")) EXPECT_TRUE(r == 0.0 || r == 1.0);
}

TEST(Persistence, RoundTripsEveryModel) {
  const Table t = step_table(150, 4).with_column(
      Column::categorical("c", std::vector<std::string>(150, "k")));
  const auto dir = std::filesystem::temp_directory_path() / "xai_models_test";
  std::filesystem::create_directories(dir);

  GbmParams params;
  params.n_trees = 12;
  params.loss = GbmLoss::logistic;
  auto gbm = train_gbm(t, "y", params);
  gbm.set_active_stages(9);
  GlmOptions glm_options;
  glm_options.l2 = 0.1;
  const auto glm = train_glm(t, "y", glm_options);
  const auto tree = train_tree(t, "y");

  for (const Predictor* m : std::initializer_list<const Predictor*>{&gbm, &glm, &tree}) {
    const auto path = dir / (m->type_name() + ".json");
    save_model(*m, path);
    const auto loaded = load_model(path);
    EXPECT_EQ(loaded->type_name(), m->type_name());
    EXPECT_EQ(loaded->predict(t), m->predict(t));
    EXPECT_EQ(loaded->to_json(), m->to_json());
  }
  std::filesystem::remove_all(dir);
}

TEST(Persistence, RejectsUnknownVersion) {
  const Table t = step_table(30, 1);
  auto j = train_tree(t, "y").to_json();
  j["version"] = 99;
  EXPECT_THROW(model_from_json(j), ConfigError);
}

TEST(GbmParamsJson, RoundTripAndUnknownKeys) {
  GbmParams p;
  p.n_trees = 7;
  p.learning_rate = 0.3;
  p.loss = GbmLoss::logistic;
  p.seed = 12;
  EXPECT_EQ(gbm_params_from_json(to_json(p)), p);
  EXPECT_THROW(gbm_params_from_json({{"n_tree", 5}}), ConfigError);
  EXPECT_EQ(gbm_params_from_json({{"loss", "bernoulli"}}).loss, GbmLoss::logistic);
}
