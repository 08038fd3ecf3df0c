#include <algorithm>
#include <cmath>
#include <limits>

#include "xai/error.hpp"
#include "xai/explain_global.hpp"

namespace xai::explain {
namespace {

// Bin edges at type-1 quantiles k/n_bins, duplicates removed.
std::vector<double> quantile_edges(std::vector<double> values, std::size_t n_bins,
                                   const std::string& name) {
  if (n_bins < 1) throw ConfigError("n_bins must be at least 1");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) throw DataError("feature '" + name + "' has no values");
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (n_bins > distinct.size()) {
    throw ConfigError("n_bins (" + std::to_string(n_bins) + ") exceeds the " +
                      std::to_string(distinct.size()) + " distinct values of '" +
                      name + "'");
  }
  if (distinct.size() < 2) throw DataError("feature '" + name + "' is constant");
  std::vector<double> edges;
  edges.reserve(n_bins + 1);
  for (std::size_t k = 0; k <= n_bins; ++k) {
    const double np = static_cast<double>(n) * static_cast<double>(k) /
                      static_cast<double>(n_bins);
    std::size_t j = static_cast<std::size_t>(std::ceil(np - 1e-9 * np));
    j = std::clamp<std::size_t>(j, 1, n);
    edges.push_back(values[j - 1]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.size() < 2) throw DataError("feature '" + name + "' is constant");
  return edges;
}

// Bin in [0, edges.size()-1): first k with x <= edges[k+1]; the minimum goes
// to bin 0.
std::size_t bin_of(const std::vector<double>& edges, double x) {
  const auto it = std::lower_bound(edges.begin() + 1, edges.end(), x);
  const auto k = static_cast<std::size_t>(it - edges.begin());
  return std::min(k, edges.size() - 1) - 1;
}

std::vector<std::size_t> complete_rows(const Frame& x,
                                       std::initializer_list<std::size_t> features) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    bool ok = true;
    for (std::size_t f : features) ok = ok && !std::isnan(x(r, f));
    if (ok) rows.push_back(r);
  }
  return rows;
}

void require_numeric(const models::Predictor& model, std::size_t feature) {
  const FeatureSpec& spec = model.schema()[feature];
  if (spec.kind != ColumnKind::numeric) {
    throw ConfigError("ALE needs a numeric feature; '" + spec.name + "' is categorical");
  }
}

}  // namespace

Profile ale_first_order(const models::Predictor& model, const Frame& data,
                        std::size_t feature, std::size_t n_bins) {
  if (feature >= model.schema().size()) throw ConfigError("feature index out of range");
  require_numeric(model, feature);
  const std::string& name = model.schema()[feature].name;
  const auto rows = complete_rows(data, {feature});
  const Frame x = data.select_rows(rows);
  std::vector<double> edges = quantile_edges(x.column(feature), n_bins, name);

  // Merge empty bins into their left neighbour.
  std::vector<std::size_t> counts;
  for (;;) {
    counts.assign(edges.size() - 1, 0);
    for (std::size_t r = 0; r < x.rows(); ++r) ++counts[bin_of(edges, x(r, feature))];
    const auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
    if (empty == counts.end()) break;
    edges.erase(edges.begin() + (empty - counts.begin()));
  }

  const std::size_t k_bins = edges.size() - 1;
  Frame lower = x;
  Frame upper = x;
  std::vector<std::size_t> bins(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    bins[r] = bin_of(edges, x(r, feature));
    lower(r, feature) = edges[bins[r]];
    upper(r, feature) = edges[bins[r] + 1];
  }
  const auto lo = model.predict(lower);
  const auto hi = model.predict(upper);
  std::vector<double> effect(k_bins, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) effect[bins[r]] += hi[r] - lo[r];

  std::vector<double> curve(k_bins + 1, 0.0);
  for (std::size_t k = 0; k < k_bins; ++k) {
    curve[k + 1] = curve[k] + effect[k] / static_cast<double>(counts[k]);
  }
  double centre = 0.0;
  for (std::size_t k = 0; k < k_bins; ++k) {
    centre += static_cast<double>(counts[k]) * (curve[k] + curve[k + 1]) / 2.0;
  }
  centre /= static_cast<double>(x.rows());
  for (double& v : curve) v -= centre;

  Profile profile;
  profile.kind = ProfileKind::ale1;
  profile.features = {name};
  profile.grid = std::move(edges);
  profile.curves = {std::move(curve)};
  profile.curve_ids = {0};
  profile.bin_counts = std::move(counts);
  return profile;
}

Profile ale_first_order(const models::Predictor& model, const data::Table& data,
                        const std::string& feature, std::size_t n_bins) {
  return ale_first_order(model, model.schema().encode(data),
                         model.schema().index_of(feature), n_bins);
}

Profile ale_second_order(const models::Predictor& model, const Frame& data,
                         std::size_t f1, std::size_t f2, std::size_t n_bins) {
  const std::size_t p = model.schema().size();
  if (f1 >= p || f2 >= p) throw ConfigError("feature index out of range");
  if (f1 == f2) throw ConfigError("second-order ALE needs two distinct features");
  require_numeric(model, f1);
  require_numeric(model, f2);
  const auto rows = complete_rows(data, {f1, f2});
  const Frame x = data.select_rows(rows);
  const auto e1 = quantile_edges(x.column(f1), n_bins, model.schema()[f1].name);
  const auto e2 = quantile_edges(x.column(f2), n_bins, model.schema()[f2].name);
  const std::size_t k1 = e1.size() - 1;
  const std::size_t k2 = e2.size() - 1;
  const std::size_t n = x.rows();

  std::vector<std::size_t> b1(n), b2(n);
  Frame ll = x, lu = x, ul = x, uu = x;
  for (std::size_t r = 0; r < n; ++r) {
    b1[r] = bin_of(e1, x(r, f1));
    b2[r] = bin_of(e2, x(r, f2));
    const double a0 = e1[b1[r]], a1 = e1[b1[r] + 1];
    const double c0 = e2[b2[r]], c1 = e2[b2[r] + 1];
    ll(r, f1) = a0; ll(r, f2) = c0;
    lu(r, f1) = a0; lu(r, f2) = c1;
    ul(r, f1) = a1; ul(r, f2) = c0;
    uu(r, f1) = a1; uu(r, f2) = c1;
  }
  const auto pll = model.predict(ll);
  const auto plu = model.predict(lu);
  const auto pul = model.predict(ul);
  const auto puu = model.predict(uu);

  std::vector<std::vector<double>> delta(k1, std::vector<double>(k2, 0.0));
  std::vector<std::vector<std::size_t>> count(k1, std::vector<std::size_t>(k2, 0));
  for (std::size_t r = 0; r < n; ++r) {
    delta[b1[r]][b2[r]] += (puu[r] - pul[r]) - (plu[r] - pll[r]);
    ++count[b1[r]][b2[r]];
  }
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      if (count[i][j] > 0) delta[i][j] /= static_cast<double>(count[i][j]);
    }
  }

  // Empty cells copy the nearest populated cell in rescaled index space.
  auto filled = delta;
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      if (count[i][j] > 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < k1; ++a) {
        for (std::size_t b = 0; b < k2; ++b) {
          if (count[a][b] == 0) continue;
          const double di = (static_cast<double>(a) - static_cast<double>(i)) /
                            static_cast<double>(k1);
          const double dj = (static_cast<double>(b) - static_cast<double>(j)) /
                            static_cast<double>(k2);
          const double d = di * di + dj * dj;
          if (d < best) {
            best = d;
            filled[i][j] = delta[a][b];
          }
        }
      }
    }
  }

  // Accumulate: f[i][j] sums the cell effects below and left of edge (i, j).
  std::vector<std::vector<double>> f(k1 + 1, std::vector<double>(k2 + 1, 0.0));
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      f[i + 1][j + 1] = filled[i][j] + f[i][j + 1] + f[i + 1][j] - f[i][j];
    }
  }

  std::vector<double> n1(k1, 0.0), n2(k2, 0.0);
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      n1[i] += static_cast<double>(count[i][j]);
      n2[j] += static_cast<double>(count[i][j]);
    }
  }
  std::vector<double> m1(k1 + 1, 0.0), m2(k2 + 1, 0.0);
  for (std::size_t i = 0; i < k1; ++i) {
    double step = 0.0;
    for (std::size_t j = 0; j < k2; ++j) {
      const double d0 = f[i + 1][j] - f[i][j];
      const double d1 = f[i + 1][j + 1] - f[i][j + 1];
      step += static_cast<double>(count[i][j]) * (d0 + d1) / 2.0;
    }
    m1[i + 1] = m1[i] + (n1[i] > 0 ? step / n1[i] : 0.0);
  }
  for (std::size_t j = 0; j < k2; ++j) {
    double step = 0.0;
    for (std::size_t i = 0; i < k1; ++i) {
      const double d0 = f[i][j + 1] - f[i][j];
      const double d1 = f[i + 1][j + 1] - f[i + 1][j];
      step += static_cast<double>(count[i][j]) * (d0 + d1) / 2.0;
    }
    m2[j + 1] = m2[j] + (n2[j] > 0 ? step / n2[j] : 0.0);
  }
  for (std::size_t i = 0; i <= k1; ++i) {
    for (std::size_t j = 0; j <= k2; ++j) f[i][j] -= m1[i] + m2[j];
  }
  double centre = 0.0;
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      centre += static_cast<double>(count[i][j]) *
                (f[i][j] + f[i + 1][j] + f[i][j + 1] + f[i + 1][j + 1]) / 4.0;
    }
  }
  centre /= static_cast<double>(n);

  Profile profile;
  profile.kind = ProfileKind::ale2;
  profile.features = {model.schema()[f1].name, model.schema()[f2].name};
  profile.grid = e1;
  profile.grid2 = e2;
  for (std::size_t j = 0; j <= k2; ++j) {
    std::vector<double> curve(k1 + 1);
    for (std::size_t i = 0; i <= k1; ++i) curve[i] = f[i][j] - centre;
    profile.curves.push_back(std::move(curve));
    profile.curve_ids.push_back(j);
  }
  profile.cell_counts = std::move(count);
  return profile;
}

Profile ale_second_order(const models::Predictor& model, const data::Table& data,
                         const std::string& feature1, const std::string& feature2,
                         std::size_t n_bins) {
  return ale_second_order(model, model.schema().encode(data),
                          model.schema().index_of(feature1),
                          model.schema().index_of(feature2), n_bins);
}

}  // namespace xai::explain
