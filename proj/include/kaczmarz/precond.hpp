#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kaczmarz/dense.hpp"
#include "kaczmarz/rng.hpp"

// Diagonal preconditioner fit from cyclic-sweep history, plus the AdaGrad
// accumulator used as the alternative diagonal preconditioner.
namespace kaczmarz {

// One recorded pair: the iterate one step before cyclic position k and the
// iterate a full sweep after it. Both bracket the same hyperplane, so the
// displacement delta = x_far - x_prev is what a single preconditioned
// projection of x_prev should reproduce.
struct HistoryPair {
  std::size_t k;    // cyclic position, 2-based like the sweep itself
  std::size_t row;  // row projected at position k
  Vector x_prev;    // iterate k-1
  Vector x_far;     // iterate k+m
};

struct HistoryBuffer {
  std::vector<std::size_t> order;  // permutation of row indices
  std::vector<HistoryPair> samples;
  // Optional subsample: indices into samples, sorted. Empty optional = all.
  std::optional<std::vector<std::size_t>> subset;

  // Uniform subsample without replacement; keeps at most max_pairs pairs.
  void subsample(std::size_t max_pairs, Xoshiro256pp& rng);
  std::vector<std::size_t> selected() const;
};

// Runs two cyclic sweeps (2m projections) from x0 following the order twice
// and records the m-1 pairs. order must be a permutation of 0..m-1.
HistoryBuffer collect_history(const DenseMatrix& a, const Vector& b,
                              const Vector& x0, std::vector<std::size_t> order);

// Incremental form of collect_history: the caller owns the iterate and feeds
// it through step() exactly 2m times, which lets a driver count each
// projection as a regular iteration. finish() yields the same buffer
// collect_history would have produced.
class HistoryCollector {
 public:
  HistoryCollector(const DenseMatrix& a, const Vector& b,
                   std::vector<std::size_t> order);

  bool done() const { return j_ >= 2 * order_size(); }
  // One cyclic projection applied to x; returns the projected row.
  std::size_t step(Vector& x);
  HistoryBuffer finish();

 private:
  std::size_t order_size() const { return buf_.order.size(); }

  const DenseMatrix& a_;
  const Vector& b_;
  HistoryBuffer buf_;
  std::size_t j_ = 0;  // projections applied so far
};

struct DiagonalFit {
  Vector s;  // diagonal of C, clamped to [1e-6, 1e6]
  double alpha_reg;
  double objective_value;
};

inline constexpr double kPrecondClampLo = 1e-6;
inline constexpr double kPrecondClampHi = 1e6;

// Regularized least-squares fit of the diagonal: the surrogate objective is
// separable per coordinate, so the normal equations are solved coordinate
// wise in O(mn).
DiagonalFit fit_diagonal(const HistoryBuffer& h, const DenseMatrix& a,
                         const Vector& b, double alpha_reg);

// Exact evaluation of the surrogate objective at s. Test oracle.
double objective_f(std::span<const double> s, const HistoryBuffer& h,
                   const DenseMatrix& a, const Vector& b, double alpha_reg);

// --- AdaGrad diagonal -------------------------------------------------------

// acc_i += g_i^2
void adagrad_accumulate(Vector& acc, std::span<const double> g);
// h_i = zeta + sqrt(acc_i)
void adagrad_matrix(const Vector& acc, double zeta, Vector& h_out);
// c_i = lambda0 + 1/h_i   (c_out may alias h)
void adagrad_precond(const Vector& h, double lambda0, Vector& c_out);

}  // namespace kaczmarz
