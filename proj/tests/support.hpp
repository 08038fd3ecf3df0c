#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xai/dataset.hpp"
#include "xai/models.hpp"
#include "xai/random.hpp"

namespace xai::fixtures {

// Table of n rows with numeric columns named x1..xp drawn U(0,1).
inline data::Table uniform_table(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) cols[c][r] = rng.uniform();
  }
  std::vector<data::Column> columns;
  for (std::size_t c = 0; c < p; ++c) {
    columns.push_back(data::Column::numeric("x" + std::to_string(c + 1), cols[c]));
  }
  return data::Table(std::move(columns));
}

inline std::vector<std::string> feature_names(std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < p; ++c) out.push_back("x" + std::to_string(c + 1));
  return out;
}

inline Frame to_frame(const data::Table& t) {
  return models::Schema::from_table(t).encode(t);
}

// Adds a numeric column computed row-wise from the encoded features.
template <typename Fn>
data::Table with_target(const data::Table& t, const std::string& name, Fn fn) {
  const Frame x = to_frame(t);
  std::vector<double> y(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) y[r] = fn(x.row(r));
  return t.with_column(data::Column::numeric(name, y));
}

// Depth-4 regression tree fit to Gaussian noise on 60 rows of 4 U(0,1) features.
inline models::TreeModel random_tree(std::uint64_t seed) {
  Rng rng(seed);
  const auto x = uniform_table(60, 4, seed + 1000);
  std::vector<double> y(60);
  for (double& v : y) v = rng.normal();
  models::TreeParams params;
  params.max_depth = 4;
  return models::train_tree(x.with_column(data::Column::numeric("y", y)), "y", params);
}

}  // namespace xai::fixtures
