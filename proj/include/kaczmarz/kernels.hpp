#pragma once

#include <cstddef>

// Dense vector kernels behind every solver inner loop. Each kernel has a
// scalar reference implementation and an AVX2 variant; the active backend is
// selected at runtime (override with KACZMARZ_KERNELS=scalar|avx2).
//
// Pairing guarantee relied on by the solvers: the weighted kernels (dot3,
// axpy3) share the accumulation structure of their unweighted counterparts,
// so with all weights equal to 1.0 they produce bit-identical results.
namespace kaczmarz::kernels {

enum class Backend { scalar, avx2 };

// Backend chosen at startup: AVX2 when the CPU supports it, unless the
// KACZMARZ_KERNELS environment variable forces one.
Backend active_backend();
const char* backend_name();

// Switch backends; returns false (and leaves the backend untouched) when the
// requested one is not available on this machine. Intended for tests.
bool set_backend(Backend b);
bool backend_available(Backend b);

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);
// sum_i x[i]^2
double dot_sq(const double* x, std::size_t n);
// sum_i x[i]*w[i]*y[i]
double dot3(const double* x, const double* w, const double* y, std::size_t n);
// y[i] += a*x[i]
void axpy(double* y, double a, const double* x, std::size_t n);
// y[i] += a*w[i]*x[i]
void axpy3(double* y, double a, const double* w, const double* x,
           std::size_t n);
// out[i] = c1*x[i] + c2*y[i]  (out may alias x or y)
void lincomb(double* out, double c1, const double* x, double c2,
             const double* y, std::size_t n);
// out[i] = c*x[i]
void scale(double* out, double c, const double* x, std::size_t n);
// acc[i] += x[i]^2
void accum_sq(double* acc, const double* x, std::size_t n);
// plane rotation: {x, y} <- {c*x - s*y, s*x + c*y}
void rot(double* x, double* y, double c, double s, std::size_t n);

// Reference implementations, callable directly in equivalence tests.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double dot3(const double* x, const double* w, const double* y, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);
void axpy3(double* y, double a, const double* w, const double* x,
           std::size_t n);
void lincomb(double* out, double c1, const double* x, double c2,
             const double* y, std::size_t n);
void scale(double* out, double c, const double* x, std::size_t n);
void accum_sq(double* acc, const double* x, std::size_t n);
void rot(double* x, double* y, double c, double s, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define KACZMARZ_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double dot3(const double* x, const double* w, const double* y, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);
void axpy3(double* y, double a, const double* w, const double* x,
           std::size_t n);
void lincomb(double* out, double c1, const double* x, double c2,
             const double* y, std::size_t n);
void scale(double* out, double c, const double* x, std::size_t n);
void accum_sq(double* acc, const double* x, std::size_t n);
void rot(double* x, double* y, double c, double s, std::size_t n);
}  // namespace avx2
#else
#define KACZMARZ_HAVE_AVX2_KERNELS 0
#endif

}  // namespace kaczmarz::kernels
