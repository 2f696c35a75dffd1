#include "kaczmarz/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace kaczmarz::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*dot3)(const double*, const double*, const double*, std::size_t);
  void (*axpy)(double*, double, const double*, std::size_t);
  void (*axpy3)(double*, double, const double*, const double*, std::size_t);
  void (*lincomb)(double*, double, const double*, double, const double*,
                  std::size_t);
  void (*scale)(double*, double, const double*, std::size_t);
  void (*accum_sq)(double*, const double*, std::size_t);
  void (*rot)(double*, double*, double, double, std::size_t);
};

constexpr Table kScalarTable = {
    scalar::dot,   scalar::dot3,  scalar::axpy,     scalar::axpy3,
    scalar::lincomb, scalar::scale, scalar::accum_sq, scalar::rot,
};

#if KACZMARZ_HAVE_AVX2_KERNELS
constexpr Table kAvx2Table = {
    avx2::dot,   avx2::dot3,  avx2::axpy,     avx2::axpy3,
    avx2::lincomb, avx2::scale, avx2::accum_sq, avx2::rot,
};
#endif

bool cpu_has_avx2() {
#if KACZMARZ_HAVE_AVX2_KERNELS
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("KACZMARZ_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

struct State {
  Backend backend;
  const Table* table;
};

State& state() {
  static State s = [] {
    const Backend b = initial_backend();
#if KACZMARZ_HAVE_AVX2_KERNELS
    if (b == Backend::avx2) return State{b, &kAvx2Table};
#endif
    return State{Backend::scalar, &kScalarTable};
  }();
  return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

const char* backend_name() {
  return state().backend == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend b) {
  return b == Backend::scalar || cpu_has_avx2();
}

bool set_backend(Backend b) {
  if (!backend_available(b)) return false;
  if (b == Backend::scalar) {
    state() = {Backend::scalar, &kScalarTable};
    return true;
  }
#if KACZMARZ_HAVE_AVX2_KERNELS
  state() = {Backend::avx2, &kAvx2Table};
  return true;
#else
  return false;
#endif
}

double dot(const double* x, const double* y, std::size_t n) {
  return state().table->dot(x, y, n);
}

double dot_sq(const double* x, std::size_t n) {
  return state().table->dot(x, x, n);
}

double dot3(const double* x, const double* w, const double* y,
            std::size_t n) {
  return state().table->dot3(x, w, y, n);
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  state().table->axpy(y, a, x, n);
}

void axpy3(double* y, double a, const double* w, const double* x,
           std::size_t n) {
  state().table->axpy3(y, a, w, x, n);
}

void lincomb(double* out, double c1, const double* x, double c2,
             const double* y, std::size_t n) {
  state().table->lincomb(out, c1, x, c2, y, n);
}

void scale(double* out, double c, const double* x, std::size_t n) {
  state().table->scale(out, c, x, n);
}

void accum_sq(double* acc, const double* x, std::size_t n) {
  state().table->accum_sq(acc, x, n);
}

void rot(double* x, double* y, double c, double s, std::size_t n) {
  state().table->rot(x, y, c, s, n);
}

}  // namespace kaczmarz::kernels
