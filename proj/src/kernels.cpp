#include "m2ef/kernels.hpp"

#include <cstdlib>
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

// ---------------------------------------------------------------------------
// Scalar reference kernels. Loop orders here are the contract: the SIMD
// variants keep the same order so they agree up to FMA rounding.
// ---------------------------------------------------------------------------

namespace scalar {

static void add(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

static void mul(std::size_t n, const double* a, const double* b, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

static void scale(std::size_t n, double c, const double* a, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c * a[i];
}

static void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

static double dot(std::size_t n, const double* a, const double* b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

static double sum(std::size_t n, const double* a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

static double max(std::size_t n, const double* a) {
  double m = a[0];
  for (std::size_t i = 1; i < n; ++i)
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
    for (std::size_t kk = 0; kk < k; ++kk)
      axpy(n, arow[kk], B + kk * n, crow);
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

}  // namespace scalar

static const KernelTable kScalarTable = {
    scalar::add,  scalar::mul,     scalar::scale,   scalar::axpy,
    scalar::dot,  scalar::sum,     scalar::max,     scalar::gemm_nn,
    scalar::gemm_nt, scalar::gemm_tn};

#ifdef M2EF_HAVE_AVX2
// Defined in kernels_avx2.cpp (compiled with -mavx2 -mfma).
const KernelTable& avx2_table();
bool cpu_has_avx2_fma();
#endif

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

namespace {

Backend pick_default() {
#ifdef M2EF_HAVE_AVX2
  if (const char* env = std::getenv("M2EF_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2_fma())
      return Backend::avx2;
  }
  if (cpu_has_avx2_fma()) return Backend::avx2;
#endif
  return Backend::scalar;
}

struct Dispatch {
  Backend backend;
  const KernelTable* table;
  Dispatch() : backend(pick_default()) { table = table_for(backend); }
  static const KernelTable* table_for(Backend b) {
#ifdef M2EF_HAVE_AVX2
    if (b == Backend::avx2) return &avx2_table();
#endif
    (void)b;
    return &kScalarTable;
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active() { return dispatch().backend; }

bool available(Backend b) {
  if (b == Backend::scalar) return true;
#ifdef M2EF_HAVE_AVX2
  return cpu_has_avx2_fma();
#else
  return false;
#endif
}

bool set_backend(Backend b) {
  if (!available(b)) return false;
  dispatch().backend = b;
  dispatch().table = Dispatch::table_for(b);
  return true;
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void add(std::size_t n, const double* a, const double* b, double* out) {
  dispatch().table->add(n, a, b, out);
}
void mul(std::size_t n, const double* a, const double* b, double* out) {
  dispatch().table->mul(n, a, b, out);
}
void scale(std::size_t n, double c, const double* a, double* out) {
  dispatch().table->scale(n, c, a, out);
}
void axpy(std::size_t n, double a, const double* x, double* y) {
  dispatch().table->axpy(n, a, x, y);
}
double dot(std::size_t n, const double* a, const double* b) {
  return dispatch().table->dot(n, a, b);
}
double sum(std::size_t n, const double* a) { return dispatch().table->sum(n, a); }
double max(std::size_t n, const double* a) { return dispatch().table->max(n, a); }
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* A,
             const double* B, double* C, bool accumulate) {
  dispatch().table->gemm_nn(m, k, n, A, B, C, accumulate);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* A,
             const double* B, double* C, bool accumulate) {
  dispatch().table->gemm_nt(m, k, n, A, B, C, accumulate);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* A,
             const double* B, double* C, bool accumulate) {
  dispatch().table->gemm_tn(m, k, n, A, B, C, accumulate);
}

}  // namespace m2ef::kernels
