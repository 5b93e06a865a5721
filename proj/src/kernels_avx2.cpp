// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and must only be entered after the runtime CPU check in
// cpu_has_avx2_fma() has passed.

#ifdef M2EF_HAVE_AVX2

#include <immintrin.h>

#include <cstddef>
#include <cstring>

namespace m2ef::kernels {

struct KernelTable {
  void (*add)(std::size_t, const double*, const double*, double*);
  void (*mul)(std::size_t, const double*, const double*, double*);
  void (*scale)(std::size_t, double, const double*, double*);
  void (*axpy)(std::size_t, double, const double*, double*);
  double (*dot)(std::size_t, const double*, const double*);
  double (*sum)(std::size_t, const double*);
  double (*max)(std::size_t, const double*);
  void (*gemm_nn)(std::size_t, std::size_t, std::size_t, const double*,
                  const double*, double*, bool);
  void (*gemm_nt)(std::size_t, std::size_t, std::size_t, const double*,
                  const double*, double*, bool);
  void (*gemm_tn)(std::size_t, std::size_t, std::size_t, const double*,
                  const double*, double*, bool);
};

bool cpu_has_avx2_fma() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace avx2 {

static inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s2 = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(s2, s2);
  return _mm_cvtsd_f64(_mm_add_sd(s2, sh));
}

static void add(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

static void mul(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

static void scale(std::size_t n, double c, const double* a, double* out) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vc, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = c * a[i];
}

static void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    _mm256_storeu_pd(y + i, y0);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

static double dot(std::size_t n, const double* a, const double* b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

static double sum(std::size_t n, const double* a) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += a[i];
  return acc;
}

static double max(std::size_t n, const double* a) {
  if (n < 4) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i)
      if (a[i] > m) m = a[i];
    return m;
  }
  __m256d vm = _mm256_loadu_pd(a);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(a + i));
  __m128d lo = _mm256_castpd256_pd128(vm);
  __m128d hi = _mm256_extractf128_pd(vm, 1);
  __m128d m2 = _mm_max_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(m2, m2);
  double m = _mm_cvtsd_f64(_mm_max_sd(m2, sh));
  for (; i < n; ++i)
    if (a[i] > m) m = a[i];
  return m;
}

static void gemm_nn(std::size_t m, std::size_t k, std::size_t n,
                    const double* A, const double* B, double* C,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C + i * n;
    if (!accumulate) std::memset(crow, 0, n * sizeof(double));
    const double* arow = A + i * k;
    std::size_t kk = 0;
    // two rank-1 updates per pass reuse the loaded C row
    for (; kk + 2 <= k; kk += 2) {
      const __m256d a0 = _mm256_set1_pd(arow[kk]);
      const __m256d a1 = _mm256_set1_pd(arow[kk + 1]);
      const double* b0 = B + kk * n;
      const double* b1 = b0 + n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d c = _mm256_loadu_pd(crow + j);
        c = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), c);
        c = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), c);
        _mm256_storeu_pd(crow + j, c);
      }
      for (; j < n; ++j) crow[j] += arow[kk] * b0[j] + arow[kk + 1] * b1[j];
    }
    for (; kk < k; ++kk) axpy(n, arow[kk], B + kk * n, crow);
  }
}

static void gemm_nt(std::size_t m, std::size_t k, std::size_t n,
                    const double* A, const double* B, double* C,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A + i * k;
    double* crow = C + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double v = dot(k, arow, B + j * k);
      crow[j] = accumulate ? crow[j] + v : v;
    }
  }
}

static void gemm_tn(std::size_t m, std::size_t k, std::size_t n,
                    const double* A, const double* B, double* C,
                    bool accumulate) {
  if (!accumulate) std::memset(C, 0, m * n * sizeof(double));
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = A + kk * m;
    const double* brow = B + kk * n;
    for (std::size_t i = 0; i < m; ++i) axpy(n, arow[i], brow, C + i * n);
  }
}

}  // namespace avx2

const KernelTable& avx2_table() {
  static const KernelTable table = {
      avx2::add,  avx2::mul,     avx2::scale,   avx2::axpy,
      avx2::dot,  avx2::sum,     avx2::max,     avx2::gemm_nn,
      avx2::gemm_nt, avx2::gemm_tn};
  return table;
}

}  // namespace m2ef::kernels

#endif  // M2EF_HAVE_AVX2
