#include <cmath>
#include <ostream>

#include "xai/error.hpp"
#include "xai/explain_global.hpp"
#include "xai/explain_local.hpp"
#include "xai/format.hpp"

namespace xai::explain {
namespace {

int label_of(double score, double threshold) { return score >= threshold ? 1 : 0; }

// Restricts each feature's pool to the predicates on it. Returns false when
// some pool ends up empty.
bool condition(PerturbationSampler& sampler, std::span<const Predicate> predicates) {
  bool ok = true;
  for (const auto& p : predicates) {
    ok = sampler.restrict(p.feature, [&](double v) { return p.holds(v); }) && ok;
  }
  return ok;
}

double precision_of(const models::Predictor& model, const PerturbationSampler& sampler,
                    std::size_t n, std::uint64_t seed, int label, double threshold) {
  Rng rng(seed);
  const auto pred = model.predict(sampler.sample(rng, n));
  std::size_t agree = 0;
  for (double s : pred) agree += label_of(s, threshold) == label ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(n);
}

}  // namespace

bool Predicate::holds(double x) const {
  if (std::isnan(x)) return false;
  switch (relation) {
    case Relation::equal: return x == lower;
    case Relation::less_equal: return x <= upper;
    case Relation::greater: return x > lower;
    case Relation::interval: return lower < x && x <= upper;
  }
  return false;
}

std::string Predicate::describe() const {
  switch (relation) {
    case Relation::equal: return feature_name + " = " + level;
    case Relation::less_equal: return feature_name + " <= " + format_double(upper);
    case Relation::greater: return feature_name + " > " + format_double(lower);
    case Relation::interval:
      return format_double(lower) + " < " + feature_name + " <= " + format_double(upper);
  }
  return feature_name;
}

bool AnchorRule::matches(std::span<const double> row) const {
  for (const auto& p : predicates) {
    if (p.feature >= row.size() || !p.holds(row[p.feature])) return false;
  }
  return true;
}

double coverage(std::span<const Predicate> predicates, const Frame& background) {
  if (background.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < background.rows(); ++r) {
    const auto row = background.row(r);
    bool ok = true;
    for (const auto& p : predicates) ok = ok && p.holds(row[p.feature]);
    hits += ok ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(background.rows());
}

std::vector<Predicate> anchor_candidates(const models::Schema& schema,
                                         const Frame& background,
                                         std::span<const double> instance) {
  std::vector<Predicate> out;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const double x = instance[f];
    if (std::isnan(x)) continue;
    Predicate p;
    p.feature = f;
    p.feature_name = schema[f].name;
    if (schema[f].kind == ColumnKind::categorical) {
      p.relation = Relation::equal;
      p.lower = p.upper = x;
      p.level = schema[f].levels.at(static_cast<std::size_t>(x));
    } else {
      const auto q = quantiles(background.column(f), {0.25, 0.5, 0.75});
      if (x <= q[0]) {
        p.relation = Relation::less_equal;
        p.upper = q[0];
      } else if (x > q[2]) {
        p.relation = Relation::greater;
        p.lower = q[2];
      } else {
        p.relation = Relation::interval;
        p.lower = x <= q[1] ? q[0] : q[1];
        p.upper = x <= q[1] ? q[1] : q[2];
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

AnchorRule anchor_explain(const models::Predictor& model, const Frame& background,
                          std::span<const double> instance, const AnchorOptions& options,
                          std::size_t instance_index) {
  const std::size_t p = model.schema().size();
  if (instance.size() != p || background.cols() != p) {
    throw SchemaError("instance and background must match the model's features");
  }
  if (!(options.tau > 0.0 && options.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(options.delta > 0.0 && options.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (options.n_samples_per_eval < 1) throw ConfigError("n_samples_per_eval must be positive");

  Frame single(1, p);
  std::copy(instance.begin(), instance.end(), single.row(0).begin());
  const int label = label_of(model.predict(single).front(), options.threshold);

  const PerturbationSampler base(background);
  const std::size_t n = options.n_samples_per_eval;
  const double margin = std::sqrt(std::log(1.0 / options.delta) / (2.0 * static_cast<double>(n)));

  auto evaluate = [&](const std::vector<Predicate>& rule, std::uint64_t seed) {
    PerturbationSampler sampler = base;
    for (const auto& pr : rule) {
      if (!sampler.restrict(pr.feature, [&](double v) { return pr.holds(v); })) {
        sampler.fix(pr.feature, instance[pr.feature]);
      }
    }
    return precision_of(model, sampler, n, seed, label, options.threshold);
  };

  AnchorRule rule;
  rule.instance = instance_index;
  rule.label = label;
  rule.tau = options.tau;
  rule.n_samples = n;

  auto record = [&](double precision) {
    rule.precision = precision;
    rule.precision_lower_bound = precision - margin;
    rule.coverage = coverage(rule.predicates, background);
    rule.steps.push_back({rule.predicates.size(), rule.precision,
                          rule.precision_lower_bound, rule.coverage});
  };

  record(evaluate(rule.predicates, derive_seed(options.seed, 0)));
  auto candidates = anchor_candidates(model.schema(), background, instance);
  std::size_t step = 0;
  while (rule.precision_lower_bound < options.tau && !candidates.empty()) {
    ++step;
    std::size_t best = 0;
    double best_precision = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      auto trial = rule.predicates;
      trial.push_back(candidates[c]);
      const double prec = evaluate(trial, derive_seed(options.seed, step, candidates[c].feature));
      if (prec > best_precision) {
        best_precision = prec;
        best = c;
      }
    }
    rule.predicates.push_back(candidates[best]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
    record(best_precision);
  }
  rule.satisfied = rule.precision_lower_bound >= options.tau;
  return rule;
}

AnchorRule anchor_explain(const models::Predictor& model, const data::Table& background,
                          const data::Table& instances, std::size_t row,
                          const AnchorOptions& options) {
  const Frame bg = model.schema().encode(background);
  const Frame x = model.schema().encode(instances);
  if (row >= x.rows()) throw ConfigError("instance row " + std::to_string(row) + " out of range");
  return anchor_explain(model, bg, x.row(row), options, row);
}

AnchorMetrics anchor_metrics(const AnchorRule& rule, const models::Predictor& model,
                             const Frame& background, std::size_t n_samples,
                             std::uint64_t seed, double threshold) {
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
  AnchorMetrics m;
  m.coverage = coverage(rule.predicates, background);
  PerturbationSampler sampler(background);
  if (!condition(sampler, rule.predicates)) return m;
  m.precision = precision_of(model, sampler, n_samples, seed, rule.label, threshold);
  return m;
}

nlohmann::json to_json(const AnchorRule& rule) {
  nlohmann::json j;
  j["instance"] = rule.instance;
  j["label"] = rule.label;
  auto& preds = j["predicates"] = nlohmann::json::array();
  for (const auto& p : rule.predicates) {
    nlohmann::json pj{{"feature", p.feature_name}, {"text", p.describe()}};
    switch (p.relation) {
      case Relation::equal: pj["relation"] = "equal"; pj["level"] = p.level; break;
      case Relation::less_equal: pj["relation"] = "less_equal"; pj["upper"] = p.upper; break;
      case Relation::greater: pj["relation"] = "greater"; pj["lower"] = p.lower; break;
      case Relation::interval:
        pj["relation"] = "interval";
        pj["lower"] = p.lower;
        pj["upper"] = p.upper;
        break;
    }
    preds.push_back(std::move(pj));
  }
  j["precision"] = rule.precision;
  j["precision_lower_bound"] = rule.precision_lower_bound;
  j["coverage"] = rule.coverage;
  j["n_samples"] = rule.n_samples;
  j["tau"] = rule.tau;
  j["satisfied"] = rule.satisfied;
  auto& steps = j["steps"] = nlohmann::json::array();
  for (const auto& s : rule.steps) {
    steps.push_back({{"n_predicates", s.n_predicates},
                     {"precision", s.precision},
                     {"precision_lower_bound", s.precision_lower_bound},
                     {"coverage", s.coverage}});
  }
  return j;
}

void write_anchor_table_csv(const std::vector<AnchorRule>& rules, std::ostream& out) {
  out << "case,precision,coverage,instance,anchor,satisfied\n";
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    std::string text;
    for (const auto& p : r.predicates) text += (text.empty() ? "" : " AND ") + p.describe();
    out << i + 1 << ',' << format_double(r.precision) << ',' << format_double(r.coverage)
        << ',' << r.instance << ',' << csv_escape(text) << ','
        << (r.satisfied ? "true" : "false") << '\n';
  }
}

}  // namespace xai::explain
