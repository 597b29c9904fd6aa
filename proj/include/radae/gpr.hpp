#pragma once

// Gaussian process regression with an isotropic squared-exponential kernel.
// Used as the per-action utility curve of the RL controller and to sample the
// class-ratio curves of non-stationary streams.

#include <span>
#include <stdexcept>
#include <vector>

#include "radae/matrix.hpp"

namespace radae::gpr {

class GprError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kFirstJitter = 1e-10;
inline constexpr double kMaxJitter = 1e-6;

struct Hyperparams {
    double sigma_f = 1.0;
    double length_scale = 1.0;
    double noise_var = 1e-2;
};

/// sigma_f^2 exp(-|x - y|^2 / (2 l^2)), Euclidean norm.
double se_kernel(std::span<const double> x, std::span<const double> y, double sigma_f,
                 double length_scale);

Matrix gram_matrix(const std::vector<Vector>& inputs, double sigma_f, double length_scale);

struct FitOptions {
    // Subtract the target mean before fitting and add it back at prediction.
    bool center_targets = true;
};

/// A fitted posterior; immutable once built.
class GprModel {
public:
    /// Throws GprError when K + noise I cannot be factorised even after jitter.
    static GprModel fit(std::vector<Vector> inputs, Vector targets, const Hyperparams& hp,
                        FitOptions options = {});

    double predict_mean(std::span<const double> x) const;
    double log_marginal_likelihood() const noexcept { return lml_; }

    const Hyperparams& hyperparams() const noexcept { return hp_; }
    const std::vector<Vector>& train_inputs() const noexcept { return inputs_; }
    const Vector& train_targets() const noexcept { return targets_; }
    const Matrix& chol_factor() const noexcept { return lower_; }
    const Vector& alpha() const noexcept { return alpha_; }
    double target_offset() const noexcept { return offset_; }
    double jitter() const noexcept { return jitter_; }
    std::size_t size() const noexcept { return inputs_.size(); }

private:
    GprModel() = default;

    std::vector<Vector> inputs_;
    Vector targets_;
    Hyperparams hp_;
    Matrix lower_;
    Vector alpha_;
    double offset_ = 0.0;
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

/// Log-spaced grid over (sigma_f, length_scale); the initial setting is always a
/// candidate so the result never scores below it.
struct HyperSearch {
    std::vector<double> sigma_f_grid;
    std::vector<double> length_grid;
    Hyperparams initial;

    static HyperSearch default_grid(double noise_var = 1e-2);
};

std::vector<double> log_space(double lo, double hi, std::size_t count);

/// Returns the best hyperparameters by log marginal likelihood; noise_var is kept
/// from `search.initial`. Throws GprError when fewer than two observations are
/// given or no candidate can be factorised.
Hyperparams optimize_hyperparams(const std::vector<Vector>& inputs, const Vector& targets,
                                 const HyperSearch& search, FitOptions options = {});

}  // namespace radae::gpr
