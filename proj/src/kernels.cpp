#include "radae/kernels.hpp"

#include <cstddef>

namespace radae::kernels {

namespace {

void check_nt(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows())
        throw DimensionError("gemm_nt: incompatible shapes");
}
void check_nn(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
        throw DimensionError("gemm_nn: incompatible shapes");
}
void check_tn(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols())
        throw DimensionError("gemm_tn_acc: incompatible shapes");
}
void check_bias(const Matrix& m, std::span<const double> bias) {
    if (bias.size() != m.cols()) throw DimensionError("bias_sigmoid: bias length");
}

// Row kernels shared by both backends; the backends differ only in how the
// outer index is distributed.

inline void nt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    const std::size_t k = a.cols();
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * c.cols();
    for (std::size_t j = 0; j < b.rows(); ++j) {
        const double* bj = b.data() + j * k;
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
        ci[j] = acc;
    }
}

inline void nn_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
        const double av = ai[l];
        const double* bl = b.data() + l * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
}

inline void tn_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t p) {
    const std::size_t m = a.rows();
    const std::size_t q = b.cols();
    double* cp = c.data() + p * q;
    for (std::size_t i = 0; i < m; ++i) {
        const double av = a(i, p);
        if (av == 0.0) continue;
        const double* bi = b.data() + i * q;
        for (std::size_t j = 0; j < q; ++j) cp[j] += av * bi[j];
    }
}

inline void bias_sigmoid_row(Matrix& m, std::span<const double> bias, std::size_t i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = sigmoid(r[j] + bias[j]);
}

}  // namespace

namespace serial {

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    check_nt(a, b, c);
    for (std::size_t i = 0; i < a.rows(); ++i) nt_row(a, b, c, i);
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    check_nn(a, b, c);
    for (std::size_t i = 0; i < a.rows(); ++i) nn_row(a, b, c, i);
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check_tn(a, b, c);
    for (std::size_t p = 0; p < a.cols(); ++p) tn_row(a, b, c, p);
}

void bias_sigmoid(Matrix& m, std::span<const double> bias) {
    check_bias(m, bias);
    for (std::size_t i = 0; i < m.rows(); ++i) bias_sigmoid_row(m, bias, i);
}

}  // namespace serial

namespace parallel {

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    check_nt(a, b, c);
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) nt_row(a, b, c, static_cast<std::size_t>(i));
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    check_nn(a, b, c);
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) nn_row(a, b, c, static_cast<std::size_t>(i));
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check_tn(a, b, c);
    const auto cols = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < cols; ++p) tn_row(a, b, c, static_cast<std::size_t>(p));
}

void bias_sigmoid(Matrix& m, std::span<const double> bias) {
    check_bias(m, bias);
    const auto rows = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) bias_sigmoid_row(m, bias, static_cast<std::size_t>(i));
}

}  // namespace parallel

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() * a.cols() * b.rows() >= kParallelThreshold) parallel::gemm_nt(a, b, c);
    else serial::gemm_nt(a, b, c);
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() * a.cols() * b.cols() >= kParallelThreshold) parallel::gemm_nn(a, b, c);
    else serial::gemm_nn(a, b, c);
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() * a.cols() * b.cols() >= kParallelThreshold) parallel::gemm_tn_acc(a, b, c);
    else serial::gemm_tn_acc(a, b, c);
}

void bias_sigmoid(Matrix& m, std::span<const double> bias) {
    if (m.rows() * m.cols() * 16 >= kParallelThreshold) parallel::bias_sigmoid(m, bias);
    else serial::bias_sigmoid(m, bias);
}

void column_sums_acc(const Matrix& m, std::span<double> out) {
    if (out.size() != m.cols()) throw DimensionError("column_sums_acc: output length");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
    }
}

}  // namespace radae::kernels
