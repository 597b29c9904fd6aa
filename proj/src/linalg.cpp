#include "radae/linalg.hpp"

#include <cmath>

namespace radae::linalg {

std::optional<Matrix> cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix not square");
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

std::optional<JitteredFactor> cholesky_with_jitter(const Matrix& a, double first_jitter,
                                                   double max_jitter) {
    if (auto l = cholesky(a)) return JitteredFactor{std::move(*l), 0.0};
    for (double jitter = first_jitter; jitter <= max_jitter * (1.0 + 1e-12); jitter *= 10.0) {
        Matrix shifted = a;
        for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) += jitter;
        if (auto l = cholesky(shifted)) return JitteredFactor{std::move(*l), jitter};
    }
    return std::nullopt;
}

Vector forward_substitute(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    if (b.size() != n) throw DimensionError("forward_substitute: length");
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
        y[i] = s / lower(i, i);
    }
    return y;
}

Vector backward_substitute_transposed(const Matrix& lower, std::span<const double> y) {
    const std::size_t n = lower.rows();
    if (y.size() != n) throw DimensionError("backward_substitute_transposed: length");
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
        x[i] = s / lower(i, i);
    }
    return x;
}

Vector cholesky_solve(const Matrix& lower, std::span<const double> b) {
    return backward_substitute_transposed(lower, forward_substitute(lower, b));
}

}  // namespace radae::linalg
