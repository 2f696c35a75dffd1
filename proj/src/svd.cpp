#include "kaczmarz/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kaczmarz/errors.hpp"
#include "kaczmarz/kernels.hpp"

namespace kaczmarz {

namespace {

// One-sided Jacobi on the columns of w (k columns of length len, column
// major). Accumulates the same rotations into the columns of v (k columns of
// length k). Returns false if the off-diagonal tolerance was not reached.
bool jacobi_orthogonalize(std::vector<double>& w, std::vector<double>& v,
                          std::size_t len, std::size_t k, double tol,
                          int max_sweeps) {
  std::vector<double> norms(k);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < k; ++j) {
      norms[j] = kernels::dot_sq(&w[j * len], len);
    }
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        double* colp = &w[p * len];
        double* colq = &w[q * len];
        const double app = norms[p];
        const double aqq = norms[q];
        const double denom = std::sqrt(app * aqq);
        if (denom == 0.0) continue;
        const double apq = kernels::dot(colp, colq, len);
        if (std::abs(apq) <= tol * denom) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t =
            (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        kernels::rot(colp, colq, c, s, len);
        kernels::rot(&v[p * k], &v[q * k], c, s, k);
        norms[p] = app - t * apq;
        norms[q] = aqq + t * apq;
      }
    }
    if (!rotated) return true;
  }
  return false;
}

}  // namespace

SvdResult svd(const DenseMatrix& a, double tol, int max_sweeps) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n) throw BadShapeError("svd requires rows >= cols");

  // Column-major working copy.
  std::vector<double> w(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) w[j * m + i] = a(i, j);
  }

  // Householder QR. Reflectors stay below the diagonal of w; beta[k] holds
  // 2 / (v_k . v_k).
  std::vector<double> beta(n, 0.0);
  std::vector<double> r(n * n, 0.0);  // column major
  for (std::size_t k = 0; k < n; ++k) {
    double* col = &w[k * m + k];
    const std::size_t len = m - k;
    const double nx = std::sqrt(kernels::dot_sq(col, len));
    if (nx > 0.0) {
      const double alpha = col[0] >= 0.0 ? -nx : nx;
      col[0] -= alpha;
      const double vtv = kernels::dot_sq(col, len);
      if (vtv > 0.0) {
        beta[k] = 2.0 / vtv;
        for (std::size_t j = k + 1; j < n; ++j) {
          double* cj = &w[j * m + k];
          const double proj = beta[k] * kernels::dot(col, cj, len);
          kernels::axpy(cj, -proj, col, len);
        }
      }
      r[k * n + k] = alpha;
    }
    for (std::size_t i = 0; i < k; ++i) r[k * n + i] = w[k * m + i];
  }

  std::vector<double> v(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) v[j * n + j] = 1.0;
  if (!jacobi_orthogonalize(r, v, n, n, tol, max_sweeps)) {
    throw SvdFailureError("one-sided Jacobi did not converge");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double* col = &r[j * n];
    const double s = std::sqrt(kernels::dot_sq(col, n));
    sigma[j] = s;
    if (s > 0.0) kernels::scale(col, 1.0 / s, col, n);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return sigma[x] > sigma[y];
  });

  SvdResult out;
  out.m = m;
  out.n = n;
  out.sigma.resize(n);
  out.u.assign(m * n, 0.0);
  out.vt.assign(n * n, 0.0);
  std::vector<double> z(m);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t jc = order[c];
    out.sigma[c] = sigma[jc];
    for (std::size_t i = 0; i < n; ++i) out.vt[c * n + i] = v[jc * n + i];
    // Left vector: apply the stored reflectors to the padded Jacobi column.
    std::fill(z.begin(), z.end(), 0.0);
    std::copy(&r[jc * n], &r[jc * n] + n, z.begin());
    for (std::size_t kk = n; kk-- > 0;) {
      if (beta[kk] == 0.0) continue;
      const double* vk = &w[kk * m + kk];
      const std::size_t len = m - kk;
      const double proj = beta[kk] * kernels::dot(vk, &z[kk], len);
      kernels::axpy(&z[kk], -proj, vk, len);
    }
    for (std::size_t i = 0; i < m; ++i) out.u[i * n + c] = z[i];
  }
  return out;
}

}  // namespace kaczmarz
