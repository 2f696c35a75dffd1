#pragma once

#include <cstddef>
#include <vector>

#include "kaczmarz/dense.hpp"

namespace kaczmarz {

// Full singular value decomposition A = U * diag(sigma) * Vt, desk scale.
struct SvdResult {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> u;      // m x n, row-major; columns are left vectors
  std::vector<double> sigma;  // length n, descending, nonnegative
  std::vector<double> vt;     // n x n, row-major; rows are right vectors
};

// Householder QR followed by one-sided Jacobi on the triangular factor.
// Requires m >= n. Throws SvdFailureError if the sweep budget is exhausted.
SvdResult svd(const DenseMatrix& a, double tol = 1e-15, int max_sweeps = 48);

}  // namespace kaczmarz
