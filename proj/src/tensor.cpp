#include "deepmatch/tensor.hpp"

#include <cmath>

#include "deepmatch/errors.hpp"

namespace deepmatch {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2 Tensor2::from_data(std::size_t rows, std::size_t cols,
                           std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw ShapeError("Tensor2::from_data: data length " +
                     std::to_string(data.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor2 t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::move(data);
  return t;
}

Tensor2 Tensor2::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  Tensor2 t;
  t.rows_ = rows.size();
  t.cols_ = rows.size() == 0 ? 0 : rows.begin()->size();
  t.data_.reserve(t.rows_ * t.cols_);
  for (const auto& r : rows) {
    if (r.size() != t.cols_) {
      throw ShapeError("Tensor2::from_rows: ragged row widths");
    }
    t.data_.insert(t.data_.end(), r.begin(), r.end());
  }
  return t;
}

bool Tensor2::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace deepmatch
