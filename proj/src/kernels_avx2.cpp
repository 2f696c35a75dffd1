#include "kaczmarz/kernels.hpp"

#if KACZMARZ_HAVE_AVX2_KERNELS

#include <immintrin.h>

// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime dispatch has confirmed support.
//
// dot/dot3 and axpy/axpy3 are kept structurally identical (same accumulator
// count, same reduction order, same tails) so that a weight vector of ones
// reproduces the unweighted kernel bit for bit.

namespace kaczmarz::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, swapped));
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8),
                           _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12),
                           _mm256_loadu_pd(y + i + 12), acc3);
  }
  __m256d acc = _mm256_add_pd(_mm256_add_pd(acc0, acc1),
                              _mm256_add_pd(acc2, acc3));
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double dot3(const double* x, const double* w, const double* y,
            std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(
        _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(w + i)),
        _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(
        _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(w + i + 4)),
        _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(
        _mm256_mul_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(w + i + 8)),
        _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(
        _mm256_mul_pd(_mm256_loadu_pd(x + i + 12),
                      _mm256_loadu_pd(w + i + 12)),
        _mm256_loadu_pd(y + i + 12), acc3);
  }
  __m256d acc = _mm256_add_pd(_mm256_add_pd(acc0, acc1),
                              _mm256_add_pd(acc2, acc3));
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(
        _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(w + i)),
        _mm256_loadu_pd(y + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += (x[i] * w[i]) * y[i];
  return total;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                               _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(
        y + i + 4, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i + 4),
                                   _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                               _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy3(double* y, double a, const double* w, const double* x,
           std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(
        y + i,
        _mm256_fmadd_pd(
            av,
            _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i)),
            _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(
        y + i + 4,
        _mm256_fmadd_pd(av,
                        _mm256_mul_pd(_mm256_loadu_pd(w + i + 4),
                                      _mm256_loadu_pd(x + i + 4)),
                        _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i,
        _mm256_fmadd_pd(
            av,
            _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i)),
            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * (w[i] * x[i]);
}

void lincomb(double* out, double c1, const double* x, double c2,
             const double* y, std::size_t n) {
  const __m256d c1v = _mm256_set1_pd(c1);
  const __m256d c2v = _mm256_set1_pd(c2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        out + i,
        _mm256_fmadd_pd(c1v, _mm256_loadu_pd(x + i),
                        _mm256_mul_pd(c2v, _mm256_loadu_pd(y + i))));
  }
  for (; i < n; ++i) out[i] = c1 * x[i] + c2 * y[i];
}

void scale(double* out, double c, const double* x, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(cv, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = c * x[i];
}

void accum_sq(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(acc + i,
                     _mm256_fmadd_pd(xv, xv, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] += x[i] * x[i];
}

void rot(double* x, double* y, double c, double s, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(x + i,
                     _mm256_fmsub_pd(cv, xv, _mm256_mul_pd(sv, yv)));
    _mm256_storeu_pd(y + i,
                     _mm256_fmadd_pd(sv, xv, _mm256_mul_pd(cv, yv)));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

}  // namespace kaczmarz::kernels::avx2

#endif  // KACZMARZ_HAVE_AVX2_KERNELS
