#include "mftse/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace mftse::kernels {

namespace ref {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void lerp(double t, const double* s, const double* b, double* out, std::size_t n) {
  const double u = 1.0 - t;
  for (std::size_t i = 0; i < n; ++i) out[i] = t * s[i] + u * b[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sumsq(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void gemv(const double* W, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias ? bias[r] : 0.0;
    const double* w = W + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
}

void gemv_t(const double* W, const double* g, double* out,
            std::size_t rows, std::size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * w[c];
  }
}

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

#if defined(__x86_64__)
bool avx2_available();
extern const Vtable kAvx2;
#elif defined(__aarch64__)
extern const Vtable kNeon;
#endif

const Vtable kScalar = {ref::axpy, ref::lerp, ref::dot, ref::sumsq,
                        ref::gemv, ref::gemv_t, "scalar"};

const Vtable& select() {
  if (const char* f = std::getenv("MFTSE_FORCE_SCALAR"); f && f[0] == '1')
    return kScalar;
#if defined(__x86_64__)
  if (avx2_available()) return kAvx2;
#elif defined(__aarch64__)
  return kNeon;
#endif
  return kScalar;
}

const Vtable& active() {
  static const Vtable& v = select();
  return v;
}

}  // namespace detail

void axpy(double a, const double* x, double* y, std::size_t n) {
  detail::active().axpy(a, x, y, n);
}
void lerp(double t, const double* s, const double* b, double* out, std::size_t n) {
  detail::active().lerp(t, s, b, out, n);
}
double dot(const double* x, const double* y, std::size_t n) {
  return detail::active().dot(x, y, n);
}
double sumsq(const double* x, std::size_t n) {
  return detail::active().sumsq(x, n);
}
void gemv(const double* W, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols) {
  detail::active().gemv(W, x, bias, y, rows, cols);
}
void gemv_t(const double* W, const double* g, double* out,
            std::size_t rows, std::size_t cols) {
  detail::active().gemv_t(W, g, out, rows, cols);
}
const char* active_backend() { return detail::active().name; }

}  // namespace mftse::kernels
