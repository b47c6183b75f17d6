#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace deepmatch {

/// Dense row-major time x channel matrix of 64-bit reals. Rows index time
/// steps (character or word positions), columns index channels. This is the
/// universal carrier for activations, encodings, and gradients.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Takes ownership of `data`, which must have rows*cols entries.
  static Tensor2 from_data(std::size_t rows, std::size_t cols,
                           std::vector<double> data);
  /// Test convenience: build from a nested brace list; all rows must have
  /// equal width.
  static Tensor2 from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  bool operator==(const Tensor2& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace deepmatch
