#pragma once

// Dense numeric kernels used by the STFT, flow-objective, and network
// inner loops. A scalar reference implementation always exists; AVX2
// (x86-64) and NEON (aarch64) variants are selected at runtime and are
// equivalence-tested against the reference.
//
// Set MFTSE_FORCE_SCALAR=1 in the environment to pin the scalar path.

#include <cstddef>

namespace mftse::kernels {

// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);

// out = t * s + (1 - t) * b
void lerp(double t, const double* s, const double* b, double* out, std::size_t n);

double dot(const double* x, const double* y, std::size_t n);

double sumsq(const double* x, std::size_t n);

// y = W x + bias, W row-major (rows x cols); bias may be null
void gemv(const double* W, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols);

// out = W^T g, W row-major (rows x cols), g has length rows, out length cols
void gemv_t(const double* W, const double* g, double* out,
            std::size_t rows, std::size_t cols);

// Name of the dispatched backend: "scalar", "avx2", or "neon".
const char* active_backend();

// Scalar reference path, always available; the equivalence tests compare
// the dispatched kernels against these.
namespace ref {
void axpy(double a, const double* x, double* y, std::size_t n);
void lerp(double t, const double* s, const double* b, double* out, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
void gemv(const double* W, const double* x, const double* bias, double* y,
          std::size_t rows, std::size_t cols);
void gemv_t(const double* W, const double* g, double* out,
            std::size_t rows, std::size_t cols);
}  // namespace ref

}  // namespace mftse::kernels
