#include <cmath>
#include <fstream>

#include "detail.hpp"
#include "xai/error.hpp"
#include "xai/models.hpp"

namespace xai::models {

// --- Schema ----------------------------------------------------------------

Schema::Schema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (features_[i].name == features_[j].name) {
        throw SchemaError("duplicate feature '" + features_[i].name + "'");
      }
    }
  }
}

Schema Schema::from_table(const data::Table& table,
                          std::span<const std::string> exclude) {
  std::vector<FeatureSpec> specs;
  for (const auto& column : table.columns()) {
    if (std::find(exclude.begin(), exclude.end(), column.name()) != exclude.end()) {
      continue;
    }
    specs.push_back(column.spec());
  }
  return Schema(std::move(specs));
}

Schema Schema::from_table(const data::Table& table,
                          std::span<const std::string> features,
                          std::string_view target) {
  if (features.empty()) {
    const std::string t(target);
    return from_table(table, std::span<const std::string>(&t, 1));
  }
  std::vector<FeatureSpec> specs;
  for (const auto& name : features) {
    if (name == target) {
      throw ConfigError("target column '" + name + "' listed among features");
    }
    specs.push_back(table.column(name).spec());
  }
  return Schema(std::move(specs));
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("unknown feature '" + std::string(name) + "'");
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

Frame Schema::encode(const data::Table& table) const {
  Frame frame(table.n_rows(), features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const FeatureSpec& spec = features_[f];
    auto idx = table.find(spec.name);
    if (!idx) throw SchemaError("missing feature column '" + spec.name + "'");
    const data::Column& column = table.column(*idx);
    if (column.kind() != spec.kind) {
      throw SchemaError("column '" + spec.name + "' is " + to_string(column.kind()) +
                        ", model expects " + to_string(spec.kind));
    }
    if (spec.kind == ColumnKind::numeric) {
      for (std::size_t r = 0; r < table.n_rows(); ++r) frame(r, f) = column.value(r);
      continue;
    }
    std::vector<double> remap(column.levels().size(), std::nan(""));
    for (std::size_t l = 0; l < column.levels().size(); ++l) {
      for (std::size_t m = 0; m < spec.levels.size(); ++m) {
        if (spec.levels[m] == column.levels()[l]) {
          remap[l] = static_cast<double>(m);
          break;
        }
      }
    }
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      frame(r, f) = column.is_missing(r)
                        ? std::nan("")
                        : remap[static_cast<std::size_t>(column.code(r))];
    }
  }
  return frame;
}

data::Table Schema::decode(const Frame& frame) const {
  std::vector<data::Column> columns;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const FeatureSpec& spec = features_[f];
    if (spec.kind == ColumnKind::numeric) {
      columns.push_back(data::Column::numeric(spec.name, frame.column(f)));
    } else {
      std::vector<int> codes(frame.rows());
      for (std::size_t r = 0; r < frame.rows(); ++r) {
        const double v = frame(r, f);
        codes[r] = std::isnan(v) ? -1 : static_cast<int>(v);
      }
      columns.push_back(data::Column::categorical_codes(spec.name, spec.levels, codes));
    }
  }
  return data::Table(std::move(columns));
}

nlohmann::json Schema::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json j{{"name", f.name}, {"kind", to_string(f.kind)}};
    if (f.kind == ColumnKind::categorical) j["levels"] = f.levels;
    arr.push_back(std::move(j));
  }
  return arr;
}

Schema Schema::from_json(const nlohmann::json& j) {
  std::vector<FeatureSpec> specs;
  for (const auto& f : j) {
    FeatureSpec spec;
    spec.name = f.at("name").get<std::string>();
    const auto kind = f.at("kind").get<std::string>();
    if (kind == "numeric") {
      spec.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      spec.kind = ColumnKind::categorical;
      spec.levels = f.at("levels").get<std::vector<std::string>>();
    } else {
      throw ConfigError("unknown feature kind '" + kind + "'");
    }
    specs.push_back(std::move(spec));
  }
  return Schema(std::move(specs));
}

Schema numeric_schema(std::span<const std::string> names) {
  std::vector<FeatureSpec> specs;
  for (const auto& n : names) specs.push_back({n, ColumnKind::numeric, {}});
  return Schema(std::move(specs));
}

Schema numeric_schema(std::initializer_list<std::string> names) {
  return numeric_schema(std::span<const std::string>(names.begin(), names.size()));
}

// --- Predictor ---------------------------------------------------------------

std::vector<double> Predictor::predict(const Frame& rows) const {
  if (rows.cols() != schema_.size()) {
    throw SchemaError("frame has " + std::to_string(rows.cols()) +
                      " columns, model expects " + std::to_string(schema_.size()));
  }
  auto out = score(rows);
  if (out.size() != rows.rows()) {
    throw ComputeError(type_name() + " returned a wrong prediction count");
  }
  return out;
}

nlohmann::json Predictor::to_json() const {
  throw ConfigError("model type '" + type_name() + "' cannot be serialized");
}

nlohmann::json Predictor::json_header() const {
  return {{"format", "xai-model"},
          {"version", kModelFormatVersion},
          {"type", type_name()},
          {"output", output_ == OutputKind::probability ? "probability" : "regression"},
          {"schema", schema_.to_json()}};
}

std::vector<double> FunctionPredictor::score(const Frame& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = fn_(rows.row(r));
  return out;
}

// --- Single tree -------------------------------------------------------------

std::vector<double> TreeModel::score(const Frame& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = tree_.predict(rows.row(r));
  return out;
}

nlohmann::json TreeModel::to_json() const {
  auto j = json_header();
  j["tree"] = tree_.to_json();
  return j;
}

std::unique_ptr<TreeModel> TreeModel::from_json(const nlohmann::json& j) {
  const auto output = j.at("output").get<std::string>() == "probability"
                          ? OutputKind::probability
                          : OutputKind::regression;
  return std::make_unique<TreeModel>(Schema::from_json(j.at("schema")),
                                     RegressionTree::from_json(j.at("tree")), output);
}

namespace detail {

void require_complete(const Frame& x, const Schema& schema) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (std::isnan(x(r, c))) {
        throw DataError("feature '" + schema[c].name +
                        "' has missing values; impute before training");
      }
    }
  }
}

}  // namespace detail

TreeModel train_tree(const data::Table& train, const std::string& target,
                     const TreeParams& params) {
  if (train.n_rows() == 0) throw DataError("empty training table");
  Schema schema = Schema::from_table(train, params.features, target);
  const Frame x = schema.encode(train);
  detail::require_complete(x, schema);
  const auto y = target_values(train, target);
  SortedIndex sorted(x, schema.features());
  std::vector<std::uint8_t> all(x.rows(), 1);
  GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_node_size = params.min_node_size;
  auto tree = grow_tree(x, schema.features(), sorted, y, 1, all, grow);
  return TreeModel(std::move(schema), std::move(tree));
}

// --- Metrics -----------------------------------------------------------------

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) {
    throw ComputeError("rmse: " + std::to_string(predictions.size()) +
                       " predictions vs " + std::to_string(truth.size()) + " targets");
  }
  if (predictions.empty()) throw ComputeError("rmse of an empty sequence");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

std::vector<double> target_values(const data::Table& table,
                                  const std::string& target) {
  const data::Column& column = table.column(target);
  if (!column.is_numeric() && column.levels().size() > 2) {
    throw ConfigError("target '" + target +
                      "' is categorical with more than two levels");
  }
  std::vector<double> y(column.size());
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (column.is_missing(r)) {
      throw DataError("target '" + target + "' is missing in row " + std::to_string(r));
    }
    y[r] = column.value(r);
  }
  return y;
}

std::vector<double> residuals(const Predictor& model, const data::Table& rows,
                              const std::string& target) {
  const auto predictions = model.predict(rows);
  const auto y = target_values(rows, target);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - predictions[i];
  return out;
}

// --- Persistence -------------------------------------------------------------

std::unique_ptr<Predictor> model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "xai-model") throw ConfigError("not a model document");
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion) {
    throw ConfigError("unsupported model format version " + std::to_string(version));
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "glm") return GlmModel::from_json(j);
  if (type == "tree") return TreeModel::from_json(j);
  if (type == "gbm") return GbmModel::from_json(j);
  throw ConfigError("unknown model type '" + type + "'");
}

void save_model(const Predictor& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << model.to_json().dump(1) << '\n';
}

std::unique_ptr<Predictor> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace xai::models
