#if defined(__x86_64__)

#include <immintrin.h>

#include <cstddef>
#include <cstring>

namespace mftse::kernels {

namespace ref {
void axpy(double, const double*, double*, std::size_t);
void lerp(double, const double*, const double*, double*, std::size_t);
double dot(const double*, const double*, std::size_t);
double sumsq(const double*, std::size_t);
void gemv(const double*, const double*, const double*, double*, std::size_t,
          std::size_t);
void gemv_t(const double*, const double*, double*, std::size_t, std::size_t);
}  // namespace ref

namespace detail {

struct Vtable {
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*lerp)(double, const double*, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*gemv)(const double*, const double*, const double*, double*,
               std::size_t, std::size_t);
  void (*gemv_t)(const double*, const double*, double*, std::size_t, std::size_t);
  const char* name;
};

bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma")))
void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma")))
void lerp_avx2(double t, const double* s, const double* b, double* out,
               std::size_t n) {
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d vu = _mm256_set1_pd(1.0 - t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(vt, _mm256_loadu_pd(s + i));
    v = _mm256_fmadd_pd(vu, _mm256_loadu_pd(b + i), v);
    _mm256_storeu_pd(out + i, v);
  }
  const double u = 1.0 - t;
  for (; i < n; ++i) out[i] = t * s[i] + u * b[i];
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

__attribute__((target("avx2,fma")))
double sumsq_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

__attribute__((target("avx2,fma")))
void gemv_avx2(const double* W, const double* x, const double* bias, double* y,
               std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + c), _mm256_loadu_pd(x + c), acc);
    double s = hsum(acc);
    for (; c < cols; ++c) s += w[c] * x[c];
    y[r] = s + (bias ? bias[r] : 0.0);
  }
}

__attribute__((target("avx2,fma")))
void gemv_t_avx2(const double* W, const double* g, double* out,
                 std::size_t rows, std::size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const __m256d vg = _mm256_set1_pd(g[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d v = _mm256_loadu_pd(out + c);
      v = _mm256_fmadd_pd(vg, _mm256_loadu_pd(w + c), v);
      _mm256_storeu_pd(out + c, v);
    }
    const double gr = g[r];
    for (; c < cols; ++c) out[c] += gr * w[c];
  }
}

}  // namespace

extern const Vtable kAvx2 = {axpy_avx2, lerp_avx2, dot_avx2,   sumsq_avx2,
                             gemv_avx2, gemv_t_avx2, "avx2"};

}  // namespace detail
}  // namespace mftse::kernels

#endif  // __x86_64__
