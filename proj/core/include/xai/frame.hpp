#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace xai {

enum class ColumnKind { numeric, categorical };

std::string to_string(ColumnKind kind);

// Name, kind and (for categorical features) the frozen level order. A
// categorical value is encoded as its level code.
struct FeatureSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> levels;

  bool operator==(const FeatureSpec&) const = default;
};

// Dense row-major matrix of encoded feature values. Missing cells are NaN.
class Frame {
 public:
  Frame() = default;
  Frame(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void set_column(std::size_t c, double value) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = value;
  }

  void append_row(std::span<const double> values) {
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  void reserve_rows(std::size_t rows) { data_.reserve(rows * cols_); }

  Frame select_rows(std::span<const std::size_t> rows) const {
    Frame out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = row(rows[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  const std::vector<double>& values() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace xai
