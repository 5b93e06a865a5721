#pragma once

#include <cstddef>

// Low-level dense kernels over contiguous double arrays. Every operation has
// a scalar reference implementation and, on x86-64 with AVX2+FMA, a vectorized
// variant. The backend is chosen once at startup (CPU detection, overridable
// with the M2EF_KERNELS environment variable or set_backend); all higher-level
// code goes through this dispatch layer.
//
// Matrices are row-major. gemm loop orders are identical between backends so
// results differ only by FMA rounding; the test suite checks equivalence to
// tight tolerances.

namespace m2ef::kernels {

enum class Backend { scalar, avx2 };

// Currently active backend.
Backend active();

// Force a backend; returns false (and leaves the active one) if unavailable.
bool set_backend(Backend b);

bool available(Backend b);

const char* backend_name(Backend b);

// out[i] = a[i] + b[i]
void add(std::size_t n, const double* a, const double* b, double* out);

// out[i] = a[i] * b[i]
void mul(std::size_t n, const double* a, const double* b, double* out);

// out[i] = c * a[i]
void scale(std::size_t n, double c, const double* a, double* out);

// y[i] += a * x[i]
void axpy(std::size_t n, double a, const double* x, double* y);

double dot(std::size_t n, const double* a, const double* b);

double sum(std::size_t n, const double* a);

// max over n >= 1 elements
double max(std::size_t n, const double* a);

// C (m x n) = A (m x k) * B (k x n); += when accumulate
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* A,
             const double* B, double* C, bool accumulate);

// C (m x n) = A (m x k) * B^T with B stored (n x k); += when accumulate
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* A,
             const double* B, double* C, bool accumulate);

// C (m x n) = A^T * B with A stored (k x m), B (k x n); += when accumulate
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* A,
             const double* B, double* C, bool accumulate);

}  // namespace m2ef::kernels
