#include "lahcn/kernels.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace lahcn::kernels {

namespace {

// Row kernels shared by both variants so the per-element arithmetic is the
// same instruction sequence.
inline void nn_row(Dims d, const double* a, const double* b, double* c, std::size_t i) {
  const double* arow = a + i * d.k;
  double* crow = c + i * d.n;
  for (std::size_t p = 0; p < d.k; ++p) {
    const double av = arow[p];
    const double* brow = b + p * d.n;
    for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * brow[j];
  }
}

inline void nt_row(Dims d, const double* a, const double* b, double* c, std::size_t i) {
  const double* arow = a + i * d.k;
  double* crow = c + i * d.n;
  std::size_t j = 0;
  // Four independent dot products at a time; each still sums in index order.
  for (; j + 4 <= d.n; j += 4) {
    const double* b0 = b + j * d.k;
    const double* b1 = b0 + d.k;
    const double* b2 = b1 + d.k;
    const double* b3 = b2 + d.k;
    double acc0 = crow[j], acc1 = crow[j + 1], acc2 = crow[j + 2], acc3 = crow[j + 3];
    for (std::size_t p = 0; p < d.k; ++p) {
      const double av = arow[p];
      acc0 += av * b0[p];
      acc1 += av * b1[p];
      acc2 += av * b2[p];
      acc3 += av * b3[p];
    }
    crow[j] = acc0;
    crow[j + 1] = acc1;
    crow[j + 2] = acc2;
    crow[j + 3] = acc3;
  }
  for (; j < d.n; ++j) {
    const double* brow = b + j * d.k;
    double acc = crow[j];
    for (std::size_t p = 0; p < d.k; ++p) acc += arow[p] * brow[p];
    crow[j] = acc;
  }
}

inline void tn_row(Dims d, const double* a, const double* b, double* c, std::size_t i) {
  double* crow = c + i * d.n;
  for (std::size_t p = 0; p < d.k; ++p) {
    const double av = a[p * d.m + i];
    const double* brow = b + p * d.n;
    for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * brow[j];
  }
}

bool use_parallel(Dims d) {
#if defined(_OPENMP)
  return d.m > 1 && d.m * d.n * d.k >= kParallelWorkThreshold && omp_get_level() == 0 &&
         omp_get_max_threads() > 1;
#else
  (void)d;
  return false;
#endif
}

}  // namespace

namespace serial {

void gemm_nn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) nn_row(d, a.data(), b.data(), c.data(), i);
}

void gemm_nt(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) nt_row(d, a.data(), b.data(), c.data(), i);
}

void gemm_tn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) tn_row(d, a.data(), b.data(), c.data(), i);
}

}  // namespace serial

namespace omp {

void gemm_nn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const auto rows = static_cast<long long>(d.m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i)
    nn_row(d, a.data(), b.data(), c.data(), static_cast<std::size_t>(i));
}

void gemm_nt(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const auto rows = static_cast<long long>(d.m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i)
    nt_row(d, a.data(), b.data(), c.data(), static_cast<std::size_t>(i));
}

void gemm_tn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const auto rows = static_cast<long long>(d.m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i)
    tn_row(d, a.data(), b.data(), c.data(), static_cast<std::size_t>(i));
}

}  // namespace omp

void gemm_nn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  use_parallel(d) ? omp::gemm_nn(d, a, b, c) : serial::gemm_nn(d, a, b, c);
}

void gemm_nt(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  use_parallel(d) ? omp::gemm_nt(d, a, b, c) : serial::gemm_nt(d, a, b, c);
}

void gemm_tn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  use_parallel(d) ? omp::gemm_tn(d, a, b, c) : serial::gemm_tn(d, a, b, c);
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace lahcn::kernels
