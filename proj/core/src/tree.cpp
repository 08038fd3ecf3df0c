#include "xai/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xai/error.hpp"
#include "xai/random.hpp"

namespace xai::models {
namespace {

constexpr double kNoGain = -std::numeric_limits<double>::infinity();

struct NodeStats {
  std::size_t count = 0;
  std::vector<double> sum;
  bool pure = true;
  std::size_t first_row = 0;
};

struct Candidate {
  double gain = kNoGain;
  int feature = -1;
  double threshold = 0.0;
  std::vector<std::uint8_t> left_levels;
};

double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConfigError("tree needs at least one node");
  const int n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      if (!std::isfinite(node.value)) throw ConfigError("non-finite leaf value");
    } else if (node.left <= 0 || node.right <= 0 || node.left >= n ||
               node.right >= n) {
      throw ConfigError("tree node has an invalid child index");
    }
  }
}

std::size_t RegressionTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    const double v = row[static_cast<std::size_t>(node.feature)];
    bool left;
    if (node.left_levels.empty()) {
      left = v <= node.threshold;
    } else {
      left = v >= 0.0 && v < static_cast<double>(node.left_levels.size()) &&
             node.left_levels[static_cast<std::size_t>(v)] != 0;
    }
    i = static_cast<std::size_t>(left ? node.left : node.right);
  }
  return i;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

nlohmann::json RegressionTree::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      arr.push_back({{"value", node.value}});
      continue;
    }
    nlohmann::json j{{"feature", node.feature}, {"left", node.left}, {"right", node.right}};
    if (node.left_levels.empty()) {
      j["threshold"] = node.threshold;
    } else {
      std::vector<std::size_t> codes;
      for (std::size_t c = 0; c < node.left_levels.size(); ++c) {
        if (node.left_levels[c]) codes.push_back(c);
      }
      j["left_levels"] = codes;
      j["n_levels"] = node.left_levels.size();
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    TreeNode node;
    if (n.contains("value")) {
      node.value = n.at("value").get<double>();
    } else {
      node.feature = n.at("feature").get<int>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      if (n.contains("left_levels")) {
        node.left_levels.assign(n.at("n_levels").get<std::size_t>(), 0);
        for (std::size_t c : n.at("left_levels").get<std::vector<std::size_t>>()) {
          node.left_levels.at(c) = 1;
        }
      } else {
        node.threshold = n.at("threshold").get<double>();
      }
    }
    nodes.push_back(std::move(node));
  }
  return RegressionTree(std::move(nodes));
}

SortedIndex::SortedIndex(const Frame& x, std::span<const FeatureSpec> features)
    : order_(features.size()) {
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f].kind != ColumnKind::numeric) continue;
    auto& order = order_[f];
    order.resize(x.rows());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return x(a, f) < x(b, f);
                     });
  }
}

RegressionTree grow_tree(const Frame& x, std::span<const FeatureSpec> features,
                         const SortedIndex& sorted,
                         std::span<const double> targets,
                         std::size_t n_outputs,
                         std::span<const std::uint8_t> in_sample,
                         const GrowParams& params) {
  const std::size_t n = x.rows();
  const std::size_t k = n_outputs;
  const std::size_t min_size = std::max<std::size_t>(1, params.min_node_size);

  std::vector<std::size_t> feature_set(features.size());
  std::iota(feature_set.begin(), feature_set.end(), std::size_t{0});
  if (params.col_sample < 1.0 && !feature_set.empty()) {
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.col_sample *
                                              static_cast<double>(features.size()))));
    Rng rng(params.seed);
    rng.shuffle(std::span<std::size_t>(feature_set));
    feature_set.resize(std::min(m, feature_set.size()));
    std::sort(feature_set.begin(), feature_set.end());
  }

  std::vector<TreeNode> nodes(1);
  std::vector<NodeStats> stats(1);
  std::vector<int> node_of(n, -1);

  auto target = [&](std::size_t r, std::size_t o) { return targets[r * k + o]; };

  auto accumulate = [&](const std::vector<int>& which) {
    for (std::size_t r = 0; r < n; ++r) {
      const int a = node_of[r];
      if (a < 0 || !which[static_cast<std::size_t>(a)]) continue;
      NodeStats& s = stats[static_cast<std::size_t>(a)];
      if (s.sum.empty()) s.sum.assign(k, 0.0);
      if (s.count == 0) {
        s.first_row = r;
      } else if (s.pure) {
        for (std::size_t o = 0; o < k; ++o) {
          if (target(r, o) != target(s.first_row, o)) {
            s.pure = false;
            break;
          }
        }
      }
      ++s.count;
      for (std::size_t o = 0; o < k; ++o) s.sum[o] += target(r, o);
    }
  };

  for (std::size_t r = 0; r < n; ++r) {
    if (in_sample[r]) node_of[r] = 0;
  }
  accumulate({1});

  std::vector<std::size_t> frontier{0};
  std::vector<int> slot_of;
  for (std::size_t depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    std::vector<std::size_t> active;
    slot_of.assign(nodes.size(), -1);
    for (std::size_t a : frontier) {
      if (!stats[a].pure && stats[a].count >= 2 * min_size) {
        slot_of[a] = static_cast<int>(active.size());
        active.push_back(a);
      }
    }
    if (active.empty()) break;
    const std::size_t n_active = active.size();

    std::vector<double> parent_term(n_active, 0.0);
    for (std::size_t s = 0; s < n_active; ++s) {
      const NodeStats& st = stats[active[s]];
      for (std::size_t o = 0; o < k; ++o) {
        parent_term[s] += st.sum[o] * st.sum[o] / static_cast<double>(st.count);
      }
    }
    auto gain_of = [&](std::size_t s, std::size_t n_left, const double* left_sum) {
      const NodeStats& st = stats[active[s]];
      const double nl = static_cast<double>(n_left);
      const double nr = static_cast<double>(st.count - n_left);
      double g = -parent_term[s];
      for (std::size_t o = 0; o < k; ++o) {
        const double right = st.sum[o] - left_sum[o];
        g += left_sum[o] * left_sum[o] / nl + right * right / nr;
      }
      return g;
    };

    std::vector<Candidate> best(n_active);
    std::vector<std::size_t> cnt;
    std::vector<double> sums;
    std::vector<double> last;

    for (std::size_t f : feature_set) {
      if (features[f].kind == ColumnKind::numeric) {
        cnt.assign(n_active, 0);
        sums.assign(n_active * k, 0.0);
        last.assign(n_active, 0.0);
        for (std::uint32_t r : sorted.order(f)) {
          const int a = node_of[r];
          if (a < 0) continue;
          const int si = slot_of[static_cast<std::size_t>(a)];
          if (si < 0) continue;
          const auto s = static_cast<std::size_t>(si);
          const double v = x(r, f);
          if (cnt[s] > 0 && v != last[s]) {
            const std::size_t n_left = cnt[s];
            const std::size_t n_right = stats[active[s]].count - n_left;
            if (n_left >= min_size && n_right >= min_size) {
              const double g = gain_of(s, n_left, &sums[s * k]);
              if (g > best[s].gain) {
                best[s].gain = g;
                best[s].feature = static_cast<int>(f);
                best[s].threshold = split_point(last[s], v);
                best[s].left_levels.clear();
              }
            }
          }
          ++cnt[s];
          for (std::size_t o = 0; o < k; ++o) sums[s * k + o] += target(r, o);
          last[s] = v;
        }
      } else {
        const std::size_t n_levels = features[f].levels.size();
        if (n_levels < 2) continue;
        cnt.assign(n_active * n_levels, 0);
        sums.assign(n_active * n_levels * k, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
          const int a = node_of[r];
          if (a < 0) continue;
          const int si = slot_of[static_cast<std::size_t>(a)];
          if (si < 0) continue;
          const auto s = static_cast<std::size_t>(si);
          const auto lvl = static_cast<std::size_t>(x(r, f));
          ++cnt[s * n_levels + lvl];
          for (std::size_t o = 0; o < k; ++o) {
            sums[(s * n_levels + lvl) * k + o] += target(r, o);
          }
        }
        std::vector<std::size_t> present;
        std::vector<double> left_sum(k);
        for (std::size_t s = 0; s < n_active; ++s) {
          present.clear();
          for (std::size_t l = 0; l < n_levels; ++l) {
            if (cnt[s * n_levels + l] > 0) present.push_back(l);
          }
          if (present.size() < 2) continue;
          auto mean0 = [&](std::size_t l) {
            return sums[(s * n_levels + l) * k] /
                   static_cast<double>(cnt[s * n_levels + l]);
          };
          std::stable_sort(present.begin(), present.end(),
                           [&](std::size_t a, std::size_t b) {
                             return mean0(a) < mean0(b);
                           });
          std::fill(left_sum.begin(), left_sum.end(), 0.0);
          std::size_t n_left = 0;
          for (std::size_t i = 0; i + 1 < present.size(); ++i) {
            const std::size_t l = present[i];
            n_left += cnt[s * n_levels + l];
            for (std::size_t o = 0; o < k; ++o) {
              left_sum[o] += sums[(s * n_levels + l) * k + o];
            }
            const std::size_t n_right = stats[active[s]].count - n_left;
            if (n_left < min_size || n_right < min_size) continue;
            const double g = gain_of(s, n_left, left_sum.data());
            if (g > best[s].gain) {
              best[s].gain = g;
              best[s].feature = static_cast<int>(f);
              best[s].threshold = 0.0;
              best[s].left_levels.assign(n_levels, 0);
              for (std::size_t j = 0; j <= i; ++j) best[s].left_levels[present[j]] = 1;
            }
          }
        }
      }
    }

    std::vector<std::size_t> next;
    for (std::size_t s = 0; s < n_active; ++s) {
      if (best[s].feature < 0) continue;
      const std::size_t a = active[s];
      const int left = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      stats.emplace_back();
      stats.emplace_back();
      TreeNode& node = nodes[a];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.left_levels = std::move(best[s].left_levels);
      node.left = left;
      node.right = left + 1;
      next.push_back(static_cast<std::size_t>(left));
      next.push_back(static_cast<std::size_t>(left + 1));
    }
    if (next.empty()) break;
    std::vector<int> fresh(nodes.size(), 0);
    for (std::size_t c : next) fresh[c] = 1;
    for (std::size_t r = 0; r < n; ++r) {
      const int a = node_of[r];
      if (a < 0) continue;
      const TreeNode& node = nodes[static_cast<std::size_t>(a)];
      if (node.is_leaf()) continue;
      const double v = x(r, static_cast<std::size_t>(node.feature));
      bool go_left;
      if (node.left_levels.empty()) {
        go_left = v <= node.threshold;
      } else {
        go_left = node.left_levels[static_cast<std::size_t>(v)] != 0;
      }
      node_of[r] = go_left ? node.left : node.right;
    }
    accumulate(fresh);
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].is_leaf()) continue;
    const NodeStats& s = stats[i];
    nodes[i].value = s.count ? s.sum[0] / static_cast<double>(s.count) : 0.0;
  }
  return RegressionTree(std::move(nodes));
}

}  // namespace xai::models
