#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>
#include <cstring>

namespace mftse::kernels {
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

namespace {

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void lerp_neon(double t, const double* s, const double* b, double* out,
               std::size_t n) {
  const float64x2_t vt = vdupq_n_f64(t);
  const float64x2_t vu = vdupq_n_f64(1.0 - t);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vmulq_f64(vt, vld1q_f64(s + i));
    v = vfmaq_f64(v, vu, vld1q_f64(b + i));
    vst1q_f64(out + i, v);
  }
  const double u = 1.0 - t;
  for (; i < n; ++i) out[i] = t * s[i] + u * b[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double sumsq_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i] * x[i];
  return r;
}

void gemv_neon(const double* W, const double* x, const double* bias, double* y,
               std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2)
      acc = vfmaq_f64(acc, vld1q_f64(w + c), vld1q_f64(x + c));
    double s = vaddvq_f64(acc);
    for (; c < cols; ++c) s += w[c] * x[c];
    y[r] = s + (bias ? bias[r] : 0.0);
  }
}

void gemv_t_neon(const double* W, const double* g, double* out,
                 std::size_t rows, std::size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const float64x2_t vg = vdupq_n_f64(g[r]);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2) {
      float64x2_t v = vld1q_f64(out + c);
      v = vfmaq_f64(v, vg, vld1q_f64(w + c));
      vst1q_f64(out + c, v);
    }
    const double gr = g[r];
    for (; c < cols; ++c) out[c] += gr * w[c];
  }
}

}  // namespace

extern const Vtable kNeon = {axpy_neon, lerp_neon, dot_neon,   sumsq_neon,
                      gemv_neon, gemv_t_neon, "neon"};

}  // namespace detail
}  // namespace mftse::kernels

#endif  // __aarch64__
