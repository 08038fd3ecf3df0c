#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "xai/dataset.hpp"
#include "xai/error.hpp"
#include "xai/random.hpp"

namespace xai::data {
namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

SplitIndices split_indices(const Table& table, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  const std::size_t n = table.n_rows();
  if (n < 2) throw SplitError("need at least 2 rows to split");

  // Strata in first-appearance order; missing values form their own stratum.
  std::vector<std::vector<std::size_t>> strata;
  if (spec.stratify_on) {
    const Column& col = table.column(*spec.stratify_on);
    std::map<double, std::size_t> slot;
    std::optional<std::size_t> missing_slot;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t s;
      if (col.is_missing(r)) {
        if (!missing_slot) {
          missing_slot = strata.size();
          strata.emplace_back();
        }
        s = *missing_slot;
      } else {
        auto [it, inserted] = slot.emplace(col.value(r), strata.size());
        if (inserted) strata.emplace_back();
        s = it->second;
      }
      strata[s].push_back(r);
    }
  } else {
    strata.push_back(iota(n));
  }

  // Largest-remainder allocation: every stratum gets floor or ceil of its
  // share and the total matches round(n * fraction).
  const std::size_t target = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction)),
      1, n - 1);
  std::vector<std::size_t> take(strata.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t allocated = 0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const double exact = static_cast<double>(strata[s].size()) * spec.train_fraction;
    take[s] = static_cast<std::size_t>(std::floor(exact));
    allocated += take[s];
    remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; allocated < target && i < remainders.size(); ++i) {
    ++take[remainders[i].second];
    ++allocated;
  }

  Rng rng(spec.seed);
  SplitIndices out;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto rows = strata[s];
    rng.shuffle(std::span<std::size_t>(rows));
    out.train.insert(out.train.end(), rows.begin(), rows.begin() + take[s]);
    out.test.insert(out.test.end(), rows.begin() + take[s], rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Table, Table> split(const Table& table, const SplitSpec& spec) {
  const auto idx = split_indices(table, spec);
  return {table.select_rows(idx.train), table.select_rows(idx.test)};
}

std::vector<Fold> kfold(std::size_t n_rows, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n_rows) {
    throw FoldError("fold count " + std::to_string(k) + " outside [2, " +
                    std::to_string(n_rows) + "]");
  }
  auto order = iota(n_rows);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold_of(n_rows);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n_rows / k + (f < n_rows % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[order[pos++]] = f;
  }
  std::vector<Fold> folds(k);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[r] == f ? folds[f].validation : folds[f].train).push_back(r);
    }
  }
  return folds;
}

}  // namespace xai::data
