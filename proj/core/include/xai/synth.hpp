#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/dataset.hpp"

namespace xai::synth {

/// Generators with known ground truth, standing in for real data in tests.
///   linear           y = 2 + 3*x1 + noise*N(0,1); x2, x3, colour inert
///   step             y = 1[x1 > 0.5], flipped with probability noise
///   interaction      y = x1*x2 + noise*N(0,1)
///   correlated-pair  x2 = 0.8*x1 + 0.6*z (r = 0.8), y = x1 + x2 + noise*N
///   noise-group      y = 1[x1 > 0.5] in groups A and B, coin flip in C
struct SyntheticSpec {
  std::string generator = "linear";
  std::size_t n_rows = 1000;
  std::uint64_t seed = 0;
  double noise = 0.1;
  double missing_fraction = 0.0;  // injected into feature cells only
};

const std::vector<std::string>& generator_names();

struct SyntheticData {
  data::Table table;
  std::string target;
  nlohmann::json truth;  // formula, active features, parameters
};

SyntheticData generate(const SyntheticSpec& spec);

}  // namespace xai::synth
