#include "kaczmarz/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "kaczmarz/kernels.hpp"
#include "kaczmarz/precond.hpp"

namespace kaczmarz {

void project_row(Vector& x, std::span<const double> a, double b_val,
                 double a_norm_sq) {
  if (a_norm_sq <= 0.0) {
    throw ZeroRowError("cannot project onto a zero row");
  }
  const double r = b_val - kernels::dot(a.data(), x.data(), a.size());
  kernels::axpy(x.data(), r / a_norm_sq, a.data(), a.size());
}

void project_row(Vector& x, std::span<const double> a, double b_val) {
  project_row(x, a, b_val, kernels::dot_sq(a.data(), a.size()));
}

std::size_t rk_step(RkState& st, const DenseMatrix& a, const Vector& b,
                    RowSource& rows) {
  const std::size_t j = rows.next_row();
  project_row(st.x, a.row_span(j), b[j], a.row_norms_sq()[j]);
  ++st.k;
  return j;
}

PrecondState::PrecondState(Vector x0, Vector s0)
    : x(std::move(x0)), s(std::move(s0)) {
  for (double si : s) {
    if (!(si > 0.0) || !std::isfinite(si)) {
      throw DegeneratePrecondError(
          "preconditioner diagonal must be positive and finite");
    }
  }
}

std::size_t apk_step(PrecondState& st, const DenseMatrix& a, const Vector& b,
                     RowSource& rows) {
  const std::size_t j = rows.next_row();
  const double* row = a.row(j);
  const std::size_t n = a.cols();
  const double r = b[j] - kernels::dot(row, st.x.data(), n);
  const double denom = kernels::dot3(row, st.s.data(), row, n);
  if (!(denom > 0.0)) {
    throw DegeneratePrecondError("a_j' C a_j is not positive");
  }
  kernels::axpy3(st.x.data(), r / denom, st.s.data(), row, n);
  ++st.k;
  return j;
}

double lipschitz_constant(const DenseMatrix& a) {
  return *std::max_element(a.row_norms_sq().begin(), a.row_norms_sq().end());
}

void GradientTable::update(const DenseMatrix& a, std::size_t j,
                           double c_new) {
  const double delta =
      (c_new - residual_coeffs_[j]) / static_cast<double>(residual_coeffs_.size());
  kernels::axpy(d_.data(), delta, a.row(j), d_.size());
  residual_coeffs_[j] = c_new;
  if (!visited_[j]) {
    visited_[j] = 1;
    ++visited_count_;
  }
  ++updates_;
}

Vector GradientTable::recompute_average(const DenseMatrix& a) const {
  Vector ref(d_.size(), 0.0);
  const double inv_m = 1.0 / static_cast<double>(residual_coeffs_.size());
  for (std::size_t i = 0; i < residual_coeffs_.size(); ++i) {
    if (residual_coeffs_[i] == 0.0) continue;
    kernels::axpy(ref.data(), residual_coeffs_[i] * inv_m, a.row(i),
                  ref.size());
  }
  return ref;
}

SagState::SagState(Vector x0, std::size_t m, double step_size)
    : x(std::move(x0)), table(m, x.size()), step(step_size) {
  if (!(step > 0.0)) throw Error("SAG step size must be positive");
}

std::size_t sag_step(SagState& st, const DenseMatrix& a, const Vector& b,
                     RowSource& rows) {
  const std::size_t j = rows.next_row();
  const double c_new = kernels::dot(a.row(j), st.x.data(), a.cols()) - b[j];
  st.table.update(a, j, c_new);
  kernels::axpy(st.x.data(), -st.step, st.table.average().data(), st.x.size());
  ++st.k;
  return j;
}

SagRkState::SagRkState(Vector x0, std::size_t m, double step_size,
                       SagRkMode mode_param)
    : x(std::move(x0)), table(m, x.size()), step(step_size), mode(mode_param) {
  if (!(step > 0.0)) throw Error("SAG step size must be positive");
}

std::size_t sag_rk_step(SagRkState& st, const DenseMatrix& a, const Vector& b,
                        RowSource& rows) {
  if (st.mode != SagRkMode::exact) {
    throw Error("sag_rk_step requires exact mode");
  }
  const std::size_t j = rows.next_row();
  const double* row = a.row(j);
  const std::size_t n = a.cols();
  // Descend along the stored average, then project from the descended point.
  kernels::axpy(st.x.data(), -st.step, st.table.average().data(), n);
  const double r = b[j] - kernels::dot(row, st.x.data(), n);
  kernels::axpy(st.x.data(), r / a.row_norms_sq()[j], row, n);
  st.table.update(a, j, -r);
  ++st.k;
  return j;
}

std::size_t sag_rk_relaxed_step(SagRkState& st, const DenseMatrix& a,
                                const Vector& b, RowSource& rows) {
  if (st.mode != SagRkMode::relaxed) {
    throw Error("sag_rk_relaxed_step requires relaxed mode");
  }
  const std::size_t j = rows.next_row();
  const double* row = a.row(j);
  const std::size_t n = a.cols();
  // The projection coefficient reuses the pre-descent residual, saving the
  // dot product at the descended point.
  const double r = b[j] - kernels::dot(row, st.x.data(), n);
  kernels::axpy(st.x.data(), -st.step, st.table.average().data(), n);
  kernels::axpy(st.x.data(), r / a.row_norms_sq()[j], row, n);
  st.table.update(a, j, -r);
  ++st.k;
  return j;
}

ArkScheduleGen::ArkScheduleGen(double lambda, double frob_sq,
                               double min_row_norm_sq) {
  if (lambda < 0.0) {
    throw InvalidLambdaError("lambda must be nonnegative");
  }
  if (!(frob_sq > 0.0) || !(min_row_norm_sq > 0.0)) {
    throw InvalidLambdaError("frob_sq and row norms must be positive");
  }
  lambda_tilde_ = lambda / frob_sq;
  if (lambda_tilde_ >= 1.0) {
    throw InvalidLambdaError("lambda must be smaller than ||A||_F^2");
  }
  nu_ = frob_sq / min_row_norm_sq;
}

ArkCoeff ArkScheduleGen::next() {
  const double lt = lambda_tilde_;
  const double g2 = gamma_prev_ * gamma_prev_;
  const double half_b = 0.5 * (1.0 / nu_ - lt * g2);
  const double gamma = half_b + std::sqrt(half_b * half_b + g2);
  gamma_prev_ = gamma;
  const double beta = 1.0 - gamma * lt;
  const double alpha = std::min(1.0, beta / (gamma * nu_ * (1.0 - lt)));
  return {alpha, beta, gamma};
}

std::vector<ArkCoeff> ark_schedule(double lambda, double frob_sq,
                                   double min_row_norm_sq,
                                   std::size_t horizon) {
  if (horizon < 1) throw BadShapeError("schedule horizon must be >= 1");
  ArkScheduleGen gen(lambda, frob_sq, min_row_norm_sq);
  std::vector<ArkCoeff> out;
  out.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) out.push_back(gen.next());
  return out;
}

ArkState::ArkState(Vector x0, double lambda_param, const DenseMatrix& a)
    : x(std::move(x0)),
      v(x),
      lambda(lambda_param),
      gen_(ArkScheduleGen(
          lambda_param, a.frob_sq(),
          *std::min_element(a.row_norms_sq().begin(), a.row_norms_sq().end()))),
      y_scratch(x.size(), 0.0) {}

ArkState::ArkState(Vector x0, double lambda_param,
                   std::vector<ArkCoeff> schedule)
    : x(std::move(x0)),
      v(x),
      lambda(lambda_param),
      fixed_(std::move(schedule)),
      y_scratch(x.size(), 0.0) {}

ArkCoeff ArkState::next_coeff() {
  if (gen_) return gen_->next();
  if (k >= fixed_.size()) {
    throw ScheduleExhaustedError("ARK coefficient schedule exhausted");
  }
  return fixed_[k];
}

std::size_t ark_step(ArkState& st, const DenseMatrix& a, const Vector& b,
                     RowSource& rows) {
  const ArkCoeff c = st.next_coeff();
  const std::size_t n = a.cols();
  kernels::lincomb(st.y_scratch.data(), c.alpha, st.v.data(), 1.0 - c.alpha,
                   st.x.data(), n);
  const std::size_t j = rows.next_row();
  const double* row = a.row(j);
  const double r = b[j] - kernels::dot(row, st.y_scratch.data(), n);
  const double t = r / a.row_norms_sq()[j];
  std::copy(st.y_scratch.begin(), st.y_scratch.end(), st.x.begin());
  kernels::axpy(st.x.data(), t, row, n);
  kernels::lincomb(st.v.data(), c.beta, st.v.data(), 1.0 - c.beta,
                   st.y_scratch.data(), n);
  kernels::axpy(st.v.data(), c.gamma * t, row, n);
  ++st.k;
  return j;
}

AdaGradRkState::AdaGradRkState(Vector x0, double zeta_param,
                               double lambda0_param)
    : x(std::move(x0)),
      acc(x.size(), 0.0),
      zeta(zeta_param),
      lambda0(lambda0_param),
      grad_scratch(x.size(), 0.0),
      precond_scratch(x.size(), 0.0) {
  if (!(zeta > 0.0)) throw Error("adagrad zeta must be positive");
  if (lambda0 < 0.0) throw Error("adagrad lambda0 must be nonnegative");
}

std::size_t adagrad_rk_step(AdaGradRkState& st, const DenseMatrix& a,
                            const Vector& b, RowSource& rows) {
  const std::size_t j = rows.next_row();
  const double* row = a.row(j);
  const std::size_t n = a.cols();
  const double c = kernels::dot(row, st.x.data(), n) - b[j];
  kernels::scale(st.grad_scratch.data(), c, row, n);
  adagrad_accumulate(st.acc, st.grad_scratch);
  adagrad_matrix(st.acc, st.zeta, st.precond_scratch);
  adagrad_precond(st.precond_scratch, st.lambda0, st.precond_scratch);
  const double denom = kernels::dot3(row, st.precond_scratch.data(), row, n);
  kernels::axpy3(st.x.data(), -c / denom, st.precond_scratch.data(), row, n);
  ++st.k;
  return j;
}

}  // namespace kaczmarz
