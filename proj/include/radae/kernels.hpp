#pragma once

// Dense kernels used by the network forward/backward passes.
//
// Every kernel exists twice: `serial::` is the reference implementation and
// `parallel::` splits the outer loop across OpenMP threads. Each output element
// is reduced in the same order in both, so the two agree bitwise. The unqualified
// entry points pick one by problem size.

#include <cmath>
#include <span>

#include "radae/matrix.hpp"

namespace radae {

inline double sigmoid(double s) noexcept { return 1.0 / (1.0 + std::exp(-s)); }

}  // namespace radae

namespace radae::kernels {

namespace serial {
/// C = A * B^T  (A: m x k, B: n x k, C: m x n)
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
/// C = A * B    (A: m x k, B: k x n, C: m x n)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
/// C += A^T * B (A: m x p, B: m x q, C: p x q)
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// In place: M(i,j) = sigmoid(M(i,j) + bias[j])
void bias_sigmoid(Matrix& m, std::span<const double> bias);
}  // namespace serial

namespace parallel {
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void bias_sigmoid(Matrix& m, std::span<const double> bias);
}  // namespace parallel

// Below this many multiply-adds the thread fork costs more than it saves.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void bias_sigmoid(Matrix& m, std::span<const double> bias);

/// out[j] += sum_i m(i, j)
void column_sums_acc(const Matrix& m, std::span<double> out);

}  // namespace radae::kernels
