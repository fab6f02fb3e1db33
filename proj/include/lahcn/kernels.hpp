#pragma once

// Dense GEMM kernels behind the tape's matmul and its gradients.
//
// Every kernel accumulates into C (C += op(A) * op(B)). Each output element is
// reduced over the inner dimension in ascending index order in both the serial
// reference and the OpenMP version, so the two produce bit-identical results
// regardless of thread count.

#include <cstddef>
#include <span>

namespace lahcn::kernels {

struct Dims {
  std::size_t m;  // rows of C
  std::size_t n;  // cols of C
  std::size_t k;  // inner dimension
};

namespace serial {
// C[m×n] += A[m×k] · B[k×n]
void gemm_nn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
// C[m×n] += A[m×k] · B[n×k]ᵀ
void gemm_nt(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
// C[m×n] += A[k×m]ᵀ · B[k×n]
void gemm_tn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
}  // namespace serial

namespace omp {
void gemm_nn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
void gemm_nt(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
void gemm_tn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
}  // namespace omp

// Multiply-add count above which the dispatchers use the OpenMP kernels.
inline constexpr std::size_t kParallelWorkThreshold = std::size_t{1} << 18;

// Dispatchers: OpenMP for large products outside an enclosing parallel
// region, serial otherwise.
void gemm_nn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
void gemm_nt(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
void gemm_tn(Dims d, std::span<const double> a, std::span<const double> b, std::span<double> c);

// Number of threads the OpenMP kernels would use (1 without OpenMP).
int max_threads();

}  // namespace lahcn::kernels
