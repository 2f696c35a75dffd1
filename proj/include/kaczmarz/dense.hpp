#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kaczmarz/errors.hpp"

namespace kaczmarz {

using Vector = std::vector<double>;

bool all_finite(std::span<const double> v);
double norm_sq(std::span<const double> v);
double norm(std::span<const double> v);

// Row-major dense matrix with cached squared row norms. Every solver touches
// one row per iteration, so rows are contiguous. Immutable after
// construction; rejects non-finite entries and zero rows up front.
class DenseMatrix {
 public:
  // entries are row-major, size rows*cols.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<const double> row_span(std::size_t i) const {
    return {row(i), cols_};
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  const std::vector<double>& entries() const { return data_; }
  const std::vector<double>& row_norms_sq() const { return row_norms_sq_; }
  double frob_sq() const { return frob_sq_; }

  // b[i] = a_i . x for all rows; b must have length rows().
  void multiply(std::span<const double> x, Vector& b) const;
  Vector multiply(std::span<const double> x) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<double> row_norms_sq_;
  double frob_sq_;
};

// Validated constructor matching the library's error contract; identical to
// calling the DenseMatrix constructor directly.
DenseMatrix build_matrix(std::size_t rows, std::size_t cols,
                         std::vector<double> entries);

// ||b - Ax|| / ||b||. Throws ZeroRhsError when ||b|| = 0.
double relative_residual(const DenseMatrix& a, std::span<const double> x,
                         std::span<const double> b);

}  // namespace kaczmarz
