#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "kaczmarz/dense.hpp"
#include "kaczmarz/sampler.hpp"

// One step rule per algorithm behind a uniform shape: each step function
// mutates its state in place, pulls exactly one row index from the injected
// RowSource, and returns that index so callers can audit the projection.
namespace kaczmarz {

// Orthogonal projection of x onto the hyperplane a.x = b_val.
void project_row(Vector& x, std::span<const double> a, double b_val);
// Variant with the squared row norm already known (cached by DenseMatrix).
void project_row(Vector& x, std::span<const double> a, double b_val,
                 double a_norm_sq);

// --- plain randomized Kaczmarz ------------------------------------------

struct RkState {
  Vector x;
  std::size_t k = 0;
};

std::size_t rk_step(RkState& st, const DenseMatrix& a, const Vector& b,
                    RowSource& rows);

// --- diagonally preconditioned Kaczmarz ----------------------------------

// Iterate plus the diagonal s of the preconditioner C. C must stay positive
// definite, so every s_i must be positive and finite.
struct PrecondState {
  PrecondState(Vector x0, Vector s0);

  Vector x;
  Vector s;
  std::size_t k = 0;
};

std::size_t apk_step(PrecondState& st, const DenseMatrix& a, const Vector& b,
                     RowSource& rows);

// --- stochastic average gradient -----------------------------------------

// max_i ||a_i||^2: the Lipschitz constant of the component gradients under
// the convention f_i(x) = 0.5*(a_i.x - b_i)^2.
double lipschitz_constant(const DenseMatrix& a);

// Stores one gradient per row as a residual coefficient c_i (the gradient is
// c_i * a_i with c_i = a_i.x_hat - b_i at the row's last evaluation point)
// plus the running average d = (1/m) sum_i c_i a_i, maintained incrementally.
class GradientTable {
 public:
  GradientTable(std::size_t m, std::size_t n)
      : residual_coeffs_(m, 0.0), d_(n, 0.0), visited_(m, 0) {}

  void update(const DenseMatrix& a, std::size_t j, double c_new);

  const Vector& average() const { return d_; }
  const std::vector<double>& residual_coeffs() const {
    return residual_coeffs_;
  }
  bool visited(std::size_t j) const { return visited_[j] != 0; }
  std::size_t visited_count() const { return visited_count_; }
  std::size_t updates() const { return updates_; }

  // From-scratch average, the drift oracle for the incremental d.
  Vector recompute_average(const DenseMatrix& a) const;
  // Replace d with the from-scratch value (periodic drift control).
  void refresh_average(const DenseMatrix& a) { d_ = recompute_average(a); }

 private:
  std::vector<double> residual_coeffs_;
  Vector d_;
  std::vector<std::uint8_t> visited_;
  std::size_t visited_count_ = 0;
  std::size_t updates_ = 0;
};

struct SagState {
  SagState(Vector x0, std::size_t m, double step_size);

  Vector x;
  GradientTable table;
  double step;
  std::size_t k = 0;
};

std::size_t sag_step(SagState& st, const DenseMatrix& a, const Vector& b,
                     RowSource& rows);

// --- SAG descent + Kaczmarz projection ------------------------------------

enum class SagRkMode { exact, relaxed };

struct SagRkState {
  SagRkState(Vector x0, std::size_t m, double step_size, SagRkMode mode);

  Vector x;
  GradientTable table;
  double step;
  SagRkMode mode;
  std::size_t k = 0;
};

// Exact mode: descend along the stored average, then project onto the
// sampled hyperplane using the residual at the descended point. The stored
// gradient for row j is refreshed at that same point.
std::size_t sag_rk_step(SagRkState& st, const DenseMatrix& a, const Vector& b,
                        RowSource& rows);

// Relaxed mode: the projection coefficient reuses the residual at the
// pre-descent iterate, so the result need not lie on the hyperplane.
std::size_t sag_rk_relaxed_step(SagRkState& st, const DenseMatrix& a,
                                const Vector& b, RowSource& rows);

// --- Nesterov-accelerated Kaczmarz ----------------------------------------

struct ArkCoeff {
  double alpha;
  double beta;
  double gamma;
};

// Offline coefficient schedule driven by lt = lambda / ||A||_F^2 and the
// sampling dispersion nu = ||A||_F^2 / min_j ||a_j||^2 (nu = m when rows are
// normalized, the setting the schedule comes from). gamma follows the
// quadratic recurrence
//   gamma_k^2 - gamma_k/nu = (1 - gamma_k*lt) * gamma_{k-1}^2
// solved for its larger root from gamma_{-1} = 0, with
//   beta_k = 1 - gamma_k*lt,
//   alpha_k = min(1, beta_k / (gamma_k * nu * (1 - lt))).
// For lambda > 0 the triple converges geometrically to its fixed point
// gamma = 1/sqrt(lt*nu), beta = 1 - sqrt(lt/nu), alpha = ~sqrt(lt/nu); the
// momentum factor beta encodes the accelerated per-iteration rate. For
// lambda = 0 it degenerates to the classical momentum sequence (beta = 1,
// gamma ~ k/(2 nu), alpha = 1/(gamma nu)).
std::vector<ArkCoeff> ark_schedule(double lambda, double frob_sq,
                                   double min_row_norm_sq,
                                   std::size_t horizon);

// Incremental form of ark_schedule: the k-th call to next() returns the k-th
// triple of the same sequence.
class ArkScheduleGen {
 public:
  ArkScheduleGen(double lambda, double frob_sq, double min_row_norm_sq);
  ArkCoeff next();

 private:
  double lambda_tilde_;
  double nu_;
  double gamma_prev_ = 0.0;
};

struct ArkState {
  // Open-ended schedule generated on demand from the system's geometry.
  ArkState(Vector x0, double lambda, const DenseMatrix& a);
  // Fixed schedule; stepping past its end throws ScheduleExhaustedError.
  ArkState(Vector x0, double lambda, std::vector<ArkCoeff> schedule);

  Vector x;
  Vector v;
  std::size_t k = 0;
  double lambda;

  ArkCoeff next_coeff();

 private:
  std::optional<ArkScheduleGen> gen_;
  std::vector<ArkCoeff> fixed_;

 public:
  Vector y_scratch;
};

std::size_t ark_step(ArkState& st, const DenseMatrix& a, const Vector& b,
                     RowSource& rows);

// --- AdaGrad-preconditioned Kaczmarz ---------------------------------------

struct AdaGradRkState {
  AdaGradRkState(Vector x0, double zeta_param, double lambda0_param);

  Vector x;
  Vector acc;  // per-coordinate sum of squared gradient entries
  double zeta;
  double lambda0;
  std::size_t k = 0;

  Vector grad_scratch;
  Vector precond_scratch;
};

std::size_t adagrad_rk_step(AdaGradRkState& st, const DenseMatrix& a,
                            const Vector& b, RowSource& rows);

}  // namespace kaczmarz
