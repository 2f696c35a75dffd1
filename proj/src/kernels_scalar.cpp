#include "kaczmarz/kernels.hpp"

// Reference kernels. Plain single-accumulator loops; the AVX2 variants are
// equivalence-tested against these.

namespace kaczmarz::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double dot3(const double* x, const double* w, const double* y,
            std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += (x[i] * w[i]) * y[i];
  return acc;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy3(double* y, double a, const double* w, const double* x,
           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * (w[i] * x[i]);
}

void lincomb(double* out, double c1, const double* x, double c2,
             const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c1 * x[i] + c2 * y[i];
}

void scale(double* out, double c, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c * x[i];
}

void accum_sq(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

void rot(double* x, double* y, double c, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

}  // namespace kaczmarz::kernels::scalar
