#include "kaczmarz/dense.hpp"

#include <cmath>
#include <string>

#include "kaczmarz/kernels.hpp"

namespace kaczmarz {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double norm_sq(std::span<const double> v) {
  return kernels::dot_sq(v.data(), v.size());
}

double norm(std::span<const double> v) { return std::sqrt(norm_sq(v)); }

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows_ < 1 || cols_ < 1) {
    throw BadShapeError("matrix must have at least one row and one column");
  }
  if (data_.size() != rows_ * cols_) {
    throw BadShapeError("entry count does not match rows*cols");
  }
  if (!all_finite(data_)) {
    throw NonFiniteError("matrix contains a NaN or infinite entry");
  }
  row_norms_sq_.resize(rows_);
  frob_sq_ = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double nsq = kernels::dot_sq(row(i), cols_);
    if (nsq == 0.0) {
      throw ZeroRowError("row " + std::to_string(i) +
                         " has zero norm; its sampling probability and "
                         "projection are undefined");
    }
    row_norms_sq_[i] = nsq;
    frob_sq_ += nsq;
  }
}

DenseMatrix DenseMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw BadShapeError("no rows");
  const std::size_t n = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw BadShapeError("ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows.size(), n, std::move(flat));
}

void DenseMatrix::multiply(std::span<const double> x, Vector& b) const {
  b.resize(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    b[i] = kernels::dot(row(i), x.data(), cols_);
  }
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
  Vector b;
  multiply(x, b);
  return b;
}

DenseMatrix build_matrix(std::size_t rows, std::size_t cols,
                         std::vector<double> entries) {
  return DenseMatrix(rows, cols, std::move(entries));
}

double relative_residual(const DenseMatrix& a, std::span<const double> x,
                         std::span<const double> b) {
  if (x.size() != a.cols() || b.size() != a.rows()) {
    throw BadShapeError("relative_residual: dimension mismatch");
  }
  const double b_norm_sq = norm_sq(b);
  if (b_norm_sq == 0.0) {
    throw ZeroRhsError("relative residual undefined for a zero right-hand side");
  }
  double r_sq = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double r = b[i] - kernels::dot(a.row(i), x.data(), a.cols());
    r_sq += r * r;
  }
  return std::sqrt(r_sq) / std::sqrt(b_norm_sq);
}

}  // namespace kaczmarz
