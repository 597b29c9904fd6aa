#pragma once

#include <optional>
#include <span>

#include "radae/matrix.hpp"

namespace radae::linalg {

/// Lower-triangular L with L L^T = a, or nullopt when `a` is not positive definite.
std::optional<Matrix> cholesky(const Matrix& a);

/// Cholesky of a + jitter * I, starting at `first_jitter` and growing tenfold up to
/// `max_jitter`. The diagonal is left untouched when the plain factorisation
/// succeeds. Returns the factor and the jitter actually added.
struct JitteredFactor {
    Matrix lower;
    double jitter = 0.0;
};
std::optional<JitteredFactor> cholesky_with_jitter(const Matrix& a, double first_jitter,
                                                   double max_jitter);

/// Solves L y = b (forward) and L^T x = y (backward).
Vector forward_substitute(const Matrix& lower, std::span<const double> b);
Vector backward_substitute_transposed(const Matrix& lower, std::span<const double> y);
Vector cholesky_solve(const Matrix& lower, std::span<const double> b);

}  // namespace radae::linalg
