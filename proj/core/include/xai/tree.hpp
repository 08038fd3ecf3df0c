#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "xai/frame.hpp"

namespace xai::models {

/// Internal nodes route a row left when `x[feature] <= threshold` (numeric)
/// or when its level code is flagged in `left_levels` (categorical).
/// Anything else, including NaN and unseen levels, goes right.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::vector<std::uint8_t> left_levels;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  std::size_t leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const {
    return nodes_[leaf_index(row)].value;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  void set_value(std::size_t node, double value) { nodes_[node].value = value; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

/// Per-feature row order of a frame, sorted by value (stable). Built once per
/// training frame and reused by every tree grown on it.
class SortedIndex {
 public:
  SortedIndex(const Frame& x, std::span<const FeatureSpec> features);
  std::span<const std::uint32_t> order(std::size_t feature) const {
    return order_[feature];
  }

 private:
  std::vector<std::vector<std::uint32_t>> order_;
};

struct GrowParams {
  std::size_t max_depth = 3;
  std::size_t min_node_size = 1;  // minimum rows in each child
  double col_sample = 1.0;        // fraction of features drawn per tree
  std::uint64_t seed = 0;
};

/// Grows a CART tree by exact greedy search, minimizing the summed squared
/// error over `n_outputs` targets (`targets` is row-major, rows x n_outputs).
/// Only rows with `in_sample[r] != 0` take part. A node is split while it
/// has impure targets, sits above max_depth and admits a split that leaves
/// min_node_size rows on each side. Numeric thresholds are midpoints between
/// adjacent distinct values; categorical partitions are prefixes of the
/// levels ordered by mean of the first target. Equal gains resolve to the
/// lowest feature index, then the lowest threshold. Leaf values are the mean
/// of the first target.
RegressionTree grow_tree(const Frame& x, std::span<const FeatureSpec> features,
                         const SortedIndex& sorted,
                         std::span<const double> targets,
                         std::size_t n_outputs,
                         std::span<const std::uint8_t> in_sample,
                         const GrowParams& params);

}  // namespace xai::models
