#include <cmath>

#include <Eigen/Dense>

#include "detail.hpp"
#include "xai/error.hpp"
#include "xai/models.hpp"

namespace xai::models {
namespace {

double softplus(double eta) {
  return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

GlmModel::GlmModel(Schema schema, GlmFamily family, double intercept,
                   std::vector<double> coefficients)
    : Predictor(std::move(schema), family == GlmFamily::logistic
                                       ? OutputKind::probability
                                       : OutputKind::regression),
      family_(family),
      intercept_(intercept),
      coef_(std::move(coefficients)) {
  if (coef_.size() != design_width()) {
    throw ConfigError("GLM coefficient count does not match its schema");
  }
}

std::size_t GlmModel::design_width() const {
  std::size_t width = 0;
  for (const auto& f : schema().features()) {
    width += f.kind == ColumnKind::numeric
                 ? 1
                 : (f.levels.empty() ? 0 : f.levels.size() - 1);
  }
  return width;
}

std::vector<std::string> GlmModel::coefficient_names() const {
  std::vector<std::string> names;
  for (const auto& f : schema().features()) {
    if (f.kind == ColumnKind::numeric) {
      names.push_back(f.name);
    } else {
      for (std::size_t l = 1; l < f.levels.size(); ++l) {
        names.push_back(f.name + "=" + f.levels[l]);
      }
    }
  }
  return names;
}

void GlmModel::design_row(std::span<const double> row, std::span<double> out) const {
  std::size_t pos = 0;
  const auto& features = schema().features();
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f].kind == ColumnKind::numeric) {
      out[pos++] = row[f];
      continue;
    }
    const std::size_t width = features[f].levels.empty() ? 0 : features[f].levels.size() - 1;
    for (std::size_t l = 0; l < width; ++l) out[pos + l] = 0.0;
    const double v = row[f];
    if (v >= 1.0 && v < static_cast<double>(features[f].levels.size())) {
      out[pos + static_cast<std::size_t>(v) - 1] = 1.0;
    }
    pos += width;
  }
}

std::vector<double> GlmModel::score(const Frame& rows) const {
  std::vector<double> out(rows.rows());
  std::vector<double> design(coef_.size());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    design_row(rows.row(r), design);
    double eta = intercept_;
    for (std::size_t j = 0; j < coef_.size(); ++j) eta += coef_[j] * design[j];
    out[r] = family_ == GlmFamily::logistic ? sigmoid(eta) : eta;
  }
  return out;
}

nlohmann::json GlmModel::to_json() const {
  auto j = json_header();
  j["family"] = family_ == GlmFamily::logistic ? "logistic" : "linear";
  j["intercept"] = intercept_;
  j["coefficients"] = coef_;
  j["coefficient_names"] = coefficient_names();
  return j;
}

std::unique_ptr<GlmModel> GlmModel::from_json(const nlohmann::json& j) {
  const auto family = j.at("family").get<std::string>() == "logistic"
                          ? GlmFamily::logistic
                          : GlmFamily::linear;
  return std::make_unique<GlmModel>(Schema::from_json(j.at("schema")), family,
                                    j.at("intercept").get<double>(),
                                    j.at("coefficients").get<std::vector<double>>());
}

GlmModel train_glm(const data::Table& train, const std::string& target,
                   const GlmOptions& options) {
  if (train.n_rows() == 0) throw DataError("empty training table");
  if (options.l2 < 0.0) throw ConfigError("l2 penalty must be non-negative");
  if (!(options.tol > 0.0)) throw ConfigError("tolerance must be positive");
  Schema schema = Schema::from_table(train, options.features, target);
  const Frame x = schema.encode(train);
  detail::require_complete(x, schema);
  const auto y_values = target_values(train, target);
  const bool logistic = options.family == GlmFamily::logistic;
  if (logistic) {
    for (double v : y_values) {
      if (v != 0.0 && v != 1.0) {
        throw DataError("logistic GLM needs a 0/1 target; '" + target +
                        "' holds " + std::to_string(v));
      }
    }
  }

  std::size_t width = 0;
  for (const auto& f : schema.features()) {
    width += f.kind == ColumnKind::numeric
                 ? 1
                 : (f.levels.empty() ? 0 : f.levels.size() - 1);
  }
  GlmModel model(std::move(schema), options.family, 0.0,
                 std::vector<double>(width, 0.0));
  const std::size_t n = x.rows();
  const std::size_t d = model.design_width() + 1;
  Eigen::MatrixXd design(n, d);
  std::vector<double> buf(d - 1);
  for (std::size_t r = 0; r < n; ++r) {
    model.design_row(x.row(r), buf);
    design(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (std::size_t j = 1; j < d; ++j) {
      design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = buf[j - 1];
    }
  }
  const Eigen::Map<const Eigen::VectorXd> y(y_values.data(), static_cast<Eigen::Index>(n));
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), options.l2);
  penalty(0) = 0.0;

  if (options.l2 == 0.0) {
    const Eigen::MatrixXd gram = design.transpose() * design * inv_n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    if (!(hi > 0.0) || lo <= 1e-12 * hi) {
      throw FitError("singular design matrix (collinear or constant features); "
                     "use l2 > 0");
    }
  }

  auto loss = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    double l = 0.0;
    if (logistic) {
      for (Eigen::Index i = 0; i < eta.size(); ++i) l += softplus(eta(i)) - y(i) * eta(i);
      l *= inv_n;
    } else {
      l = 0.5 * (y - eta).squaredNorm() * inv_n;
    }
    return l + 0.5 * beta.cwiseProduct(penalty).dot(beta);
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  double current = loss(beta);
  std::size_t iter = 0;
  double grad_norm = 0.0;
  for (;; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd weights(static_cast<Eigen::Index>(n));
    Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double mu = logistic ? sigmoid(eta(i)) : eta(i);
      resid(i) = mu - y(i);
      weights(i) = logistic ? mu * (1.0 - mu) : 1.0;
    }
    const Eigen::VectorXd grad =
        design.transpose() * resid * inv_n + penalty.cwiseProduct(beta);
    grad_norm = grad.norm();
    if (grad_norm <= options.tol || iter >= options.max_iter) break;

    Eigen::MatrixXd hessian =
        design.transpose() * weights.asDiagonal() * design * inv_n;
    hessian.diagonal() += penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = -grad;
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd newton = ldlt.solve(-grad);
      if (newton.allFinite() && newton.dot(grad) < 0.0) step = newton;
    }
    // Halve the step until the loss stops increasing.
    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double next = loss(candidate);
    while (next > current && t > 1e-12) {
      t *= 0.5;
      candidate = beta + t * step;
      next = loss(candidate);
    }
    if (next > current) break;
    beta = candidate;
    current = next;
  }

  model.intercept_ = beta(0);
  model.coef_.assign(beta.data() + 1, beta.data() + d);
  model.iterations_ = iter;
  model.gradient_norm_ = grad_norm;
  return model;
}

}  // namespace xai::models
