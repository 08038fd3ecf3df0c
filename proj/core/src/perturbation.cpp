#include <cmath>

#include "xai/error.hpp"
#include "xai/explain_local.hpp"

namespace xai::explain {

PerturbationSampler::PerturbationSampler(const Frame& background)
    : pools_(background.cols()) {
  if (background.rows() == 0) throw DataError("background table has no rows");
  for (std::size_t f = 0; f < background.cols(); ++f) {
    auto& pool = pools_[f];
    pool.reserve(background.rows());
    for (std::size_t r = 0; r < background.rows(); ++r) {
      if (!std::isnan(background(r, f))) pool.push_back(background(r, f));
    }
    if (pool.empty()) pool.push_back(std::nan(""));
  }
}

void PerturbationSampler::sample(Rng& rng, std::span<double> out) const {
  if (out.size() != pools_.size()) throw ComputeError("sample width mismatch");
  for (std::size_t f = 0; f < pools_.size(); ++f) {
    const auto& pool = pools_[f];
    if (pool.empty()) throw ComputeError("no background value satisfies the condition");
    out[f] = pool.size() == 1 ? pool.front() : pool[rng.index(pool.size())];
  }
}

Frame PerturbationSampler::sample(Rng& rng, std::size_t n) const {
  Frame out(n, pools_.size());
  for (std::size_t r = 0; r < n; ++r) sample(rng, out.row(r));
  return out;
}

}  // namespace xai::explain
