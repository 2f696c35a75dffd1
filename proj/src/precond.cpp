#include "kaczmarz/precond.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kaczmarz/kernels.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz {

void HistoryBuffer::subsample(std::size_t max_pairs, Xoshiro256pp& rng) {
  if (samples.size() <= max_pairs) {
    subset.reset();
    return;
  }
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < max_pairs; ++i) {
    const std::size_t j = i + rng.next_below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_pairs);
  std::sort(idx.begin(), idx.end());
  subset = std::move(idx);
}

std::vector<std::size_t> HistoryBuffer::selected() const {
  if (subset) return *subset;
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

HistoryCollector::HistoryCollector(const DenseMatrix& a, const Vector& b,
                                   std::vector<std::size_t> order)
    : a_(a), b_(b) {
  const std::size_t m = a.rows();
  if (order.size() != m) throw BadShapeError("order must have one entry per row");
  {
    std::vector<std::uint8_t> seen(m, 0);
    for (std::size_t r : order) {
      if (r >= m || seen[r]) {
        throw BadShapeError("order is not a permutation of the row indices");
      }
      seen[r] = 1;
    }
  }
  if (b.size() != m) throw BadShapeError("collect_history: rhs length mismatch");
  buf_.order = std::move(order);
  buf_.samples.resize(m >= 2 ? m - 1 : 0);
}

std::size_t HistoryCollector::step(Vector& x) {
  if (done()) throw Error("history collection already complete");
  const std::size_t m = order_size();
  // Iterate x_j for j = 1..2m; x_j lands on the hyperplane of order[(j-1)%m].
  // Pair k (= 2..m) stores x_prev = x_{k-1} and x_far = x_{k+m}: one position
  // before and one full sweep after the same cyclic slot.
  const std::size_t j = ++j_;
  const std::size_t row = buf_.order[(j - 1) % m];
  project_row(x, a_.row_span(row), b_[row], a_.row_norms_sq()[row]);
  if (j >= 1 && j + 1 <= m) {
    auto& pair = buf_.samples[j - 1];  // pair for k = j+1
    pair.k = j + 1;
    pair.row = buf_.order[j];
    pair.x_prev = x;
  }
  if (j >= m + 2) {
    buf_.samples[j - m - 2].x_far = x;  // pair for k = j-m
  }
  return row;
}

HistoryBuffer HistoryCollector::finish() {
  if (!done()) throw Error("history collection still in progress");
  return std::move(buf_);
}

HistoryBuffer collect_history(const DenseMatrix& a, const Vector& b,
                              const Vector& x0,
                              std::vector<std::size_t> order) {
  if (x0.size() != a.cols()) {
    throw BadShapeError("collect_history: x0 length mismatch");
  }
  HistoryCollector collector(a, b, std::move(order));
  Vector x = x0;
  while (!collector.done()) collector.step(x);
  return collector.finish();
}

namespace {

double clamp_diag(double v) {
  return std::clamp(v, kPrecondClampLo, kPrecondClampHi);
}

// Residual-scaled row coefficient shared by the fit and the objective:
// the pseudo-projection of x_prev along C a_row has per-coordinate gain
// coef * a_row[c] * s[c] with coef = (b_row - a_row . x_prev) / ||a_row||^2.
double pair_coefficient(const DenseMatrix& a, const Vector& b,
                        const HistoryPair& p) {
  const double resid =
      b[p.row] - kernels::dot(a.row(p.row), p.x_prev.data(), a.cols());
  return resid / a.row_norms_sq()[p.row];
}

}  // namespace

DiagonalFit fit_diagonal(const HistoryBuffer& h, const DenseMatrix& a,
                         const Vector& b, double alpha_reg) {
  if (!(alpha_reg > 0.0)) {
    throw Error("fit_diagonal requires a positive regularization weight");
  }
  const std::size_t n = a.cols();
  Vector denom(n, 0.0);
  Vector numer(n, 0.0);
  for (const std::size_t si : h.selected()) {
    const HistoryPair& p = h.samples[si];
    const double coef = pair_coefficient(a, b, p);
    const double* row = a.row(p.row);
    for (std::size_t c = 0; c < n; ++c) {
      const double av = coef * row[c];
      denom[c] += av * av;
      numer[c] += av * (p.x_far[c] - p.x_prev[c]);
    }
  }
  DiagonalFit fit;
  fit.alpha_reg = alpha_reg;
  fit.s.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    fit.s[c] = clamp_diag((numer[c] + alpha_reg) / (denom[c] + alpha_reg));
  }
  fit.objective_value = objective_f(fit.s, h, a, b, alpha_reg);
  return fit;
}

double objective_f(std::span<const double> s, const HistoryBuffer& h,
                   const DenseMatrix& a, const Vector& b, double alpha_reg) {
  const std::size_t n = a.cols();
  if (s.size() != n) throw BadShapeError("objective_f: s has wrong length");
  double f = 0.0;
  for (const std::size_t si : h.selected()) {
    const HistoryPair& p = h.samples[si];
    const double coef = pair_coefficient(a, b, p);
    const double* row = a.row(p.row);
    for (std::size_t c = 0; c < n; ++c) {
      const double t = (p.x_far[c] - p.x_prev[c]) - coef * row[c] * s[c];
      f += t * t;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double d = s[c] - 1.0;
    f += alpha_reg * d * d;
  }
  return f;
}

void adagrad_accumulate(Vector& acc, std::span<const double> g) {
  if (acc.size() != g.size()) {
    throw BadShapeError("adagrad_accumulate: length mismatch");
  }
  kernels::accum_sq(acc.data(), g.data(), g.size());
}

void adagrad_matrix(const Vector& acc, double zeta, Vector& h_out) {
  if (!(zeta > 0.0)) throw Error("adagrad zeta must be positive");
  h_out.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    h_out[i] = zeta + std::sqrt(acc[i]);
  }
}

void adagrad_precond(const Vector& h, double lambda0, Vector& c_out) {
  c_out.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    c_out[i] = lambda0 + 1.0 / h[i];
  }
}

}  // namespace kaczmarz
