#include <algorithm>
#include <cmath>
#include <deque>

#include "xai/error.hpp"
#include "xai/random.hpp"
#include "xai/synth.hpp"

namespace xai::synth {
namespace {

using data::Column;

struct Builder {
  // deque keeps references from num() and cat() valid.
  std::deque<std::pair<std::string, std::vector<double>>> numeric;
  std::deque<std::pair<std::string, std::vector<int>>> codes;
  std::vector<std::vector<std::string>> levels;

  std::vector<double>& num(const std::string& name, std::size_t n) {
    numeric.emplace_back(name, std::vector<double>(n));
    return numeric.back().second;
  }
  std::vector<int>& cat(const std::string& name, std::vector<std::string> lv,
                        std::size_t n) {
    codes.emplace_back(name, std::vector<int>(n));
    levels.push_back(std::move(lv));
    return codes.back().second;
  }
};

SyntheticData finish(Builder& b, const std::string& target, nlohmann::json truth,
                     const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.seed, 1));
  std::vector<Column> columns;
  for (auto& [name, values] : b.numeric) {
    if (name != target) {
      for (double& v : values) {
        if (spec.missing_fraction > 0.0 && rng.bernoulli(spec.missing_fraction)) {
          v = std::nan("");
        }
      }
    }
    columns.push_back(Column::numeric(name, values));
  }
  for (std::size_t c = 0; c < b.codes.size(); ++c) {
    auto& [name, codes] = b.codes[c];
    if (name != target) {
      for (int& v : codes) {
        if (spec.missing_fraction > 0.0 && rng.bernoulli(spec.missing_fraction)) v = -1;
      }
    }
    columns.push_back(Column::categorical_codes(name, b.levels[c], codes));
  }
  truth["generator"] = spec.generator;
  truth["n_rows"] = spec.n_rows;
  truth["seed"] = spec.seed;
  truth["noise"] = spec.noise;
  truth["missing_fraction"] = spec.missing_fraction;
  truth["target"] = target;
  return {data::Table(std::move(columns)), target, std::move(truth)};
}

}  // namespace

const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names{"linear", "step", "interaction",
                                              "correlated-pair", "noise-group"};
  return names;
}

SyntheticData generate(const SyntheticSpec& spec) {
  const auto& names = generator_names();
  if (std::find(names.begin(), names.end(), spec.generator) == names.end()) {
    throw ConfigError("unknown generator '" + spec.generator +
                      "' (expected linear, step, interaction, correlated-pair or noise-group)");
  }
  if (spec.n_rows == 0) throw ConfigError("n_rows must be positive");
  if (!(spec.noise >= 0.0)) throw ConfigError("noise must be non-negative");
  if (!(spec.missing_fraction >= 0.0 && spec.missing_fraction < 1.0)) {
    throw ConfigError("missing_fraction must lie in [0, 1)");
  }
  const std::size_t n = spec.n_rows;
  Rng rng(derive_seed(spec.seed, 0));
  Builder b;

  if (spec.generator == "linear") {
    auto& x1 = b.num("x1", n);
    auto& x2 = b.num("x2", n);
    auto& x3 = b.num("x3", n);
    auto& y = b.num("y", n);
    auto& colour = b.cat("colour", {"red", "green", "blue"}, n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = rng.uniform();
      x2[i] = rng.uniform();
      x3[i] = rng.uniform();
      colour[i] = static_cast<int>(rng.index(3));
      y[i] = 2.0 + 3.0 * x1[i] + spec.noise * rng.normal();
    }
    return finish(b, "y",
                  {{"formula", "y = 2 + 3*x1 + noise*N(0,1)"},
                   {"active", {"x1"}},
                   {"inert", {"x2", "x3", "colour"}},
                   {"coefficients", {{"intercept", 2.0}, {"x1", 3.0}}}},
                  spec);
  }
  if (spec.generator == "step") {
    auto& x1 = b.num("x1", n);
    auto& x2 = b.num("x2", n);
    auto& x3 = b.num("x3", n);
    auto& y = b.num("y", n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = rng.uniform();
      x2[i] = rng.uniform();
      x3[i] = rng.uniform();
      const bool flip = rng.bernoulli(spec.noise);
      y[i] = (x1[i] > 0.5) != flip ? 1.0 : 0.0;
    }
    return finish(b, "y",
                  {{"formula", "y = 1[x1 > 0.5], flipped with probability noise"},
                   {"active", {"x1"}},
                   {"inert", {"x2", "x3"}},
                   {"threshold", 0.5}},
                  spec);
  }
  if (spec.generator == "interaction") {
    auto& x1 = b.num("x1", n);
    auto& x2 = b.num("x2", n);
    auto& x3 = b.num("x3", n);
    auto& y = b.num("y", n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = rng.uniform();
      x2[i] = rng.uniform();
      x3[i] = rng.uniform();
      y[i] = x1[i] * x2[i] + spec.noise * rng.normal();
    }
    return finish(b, "y",
                  {{"formula", "y = x1*x2 + noise*N(0,1)"},
                   {"active", {"x1", "x2"}},
                   {"inert", {"x3"}}},
                  spec);
  }
  if (spec.generator == "correlated-pair") {
    auto& x1 = b.num("x1", n);
    auto& x2 = b.num("x2", n);
    auto& x3 = b.num("x3", n);
    auto& y = b.num("y", n);
    for (std::size_t i = 0; i < n; ++i) {
      x1[i] = rng.normal();
      x2[i] = 0.8 * x1[i] + 0.6 * rng.normal();
      x3[i] = rng.normal();
      y[i] = x1[i] + x2[i] + spec.noise * rng.normal();
    }
    return finish(b, "y",
                  {{"formula", "x2 = 0.8*x1 + 0.6*z; y = x1 + x2 + noise*N(0,1)"},
                   {"active", {"x1", "x2"}},
                   {"inert", {"x3"}},
                   {"correlation", 0.8}},
                  spec);
  }
  // noise-group
  auto& x1 = b.num("x1", n);
  auto& x2 = b.num("x2", n);
  auto& y = b.num("y", n);
  auto& group = b.cat("group", {"A", "B", "C"}, n);
  for (std::size_t i = 0; i < n; ++i) {
    group[i] = static_cast<int>(rng.index(3));
    x1[i] = rng.uniform();
    x2[i] = rng.uniform();
    if (group[i] == 2) {
      y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    } else {
      const bool flip = rng.bernoulli(spec.noise);
      y[i] = (x1[i] > 0.5) != flip ? 1.0 : 0.0;
    }
  }
  return finish(b, "y",
                {{"formula", "y = 1[x1 > 0.5] (flip prob noise) in groups A, B; coin flip in C"},
                 {"active", {"x1"}},
                 {"inert", {"x2"}},
                 {"noise_group", "C"}},
                spec);
}

}  // namespace xai::synth
