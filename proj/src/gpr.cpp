#include "radae/gpr.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "radae/linalg.hpp"

namespace radae::gpr {

double se_kernel(std::span<const double> x, std::span<const double> y, double sigma_f,
                 double length_scale) {
    if (x.size() != y.size()) throw DimensionError("se_kernel: dimension mismatch");
    if (!(length_scale > 0.0)) throw std::invalid_argument("se_kernel: length scale must be > 0");
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sq += d * d;
    }
    return sigma_f * sigma_f * std::exp(-sq / (2.0 * length_scale * length_scale));
}

Matrix gram_matrix(const std::vector<Vector>& inputs, double sigma_f, double length_scale) {
    const std::size_t n = inputs.size();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = se_kernel(inputs[i], inputs[i], sigma_f, length_scale);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = se_kernel(inputs[i], inputs[j], sigma_f, length_scale);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

GprModel GprModel::fit(std::vector<Vector> inputs, Vector targets, const Hyperparams& hp,
                       FitOptions options) {
    if (inputs.empty()) throw GprError("fit: no observations");
    if (inputs.size() != targets.size()) throw DimensionError("fit: inputs/targets length mismatch");
    for (const auto& x : inputs)
        if (x.size() != inputs.front().size()) throw DimensionError("fit: ragged inputs");
    if (hp.noise_var < 0.0) throw std::invalid_argument("fit: negative noise variance");

    GprModel model;
    model.hp_ = hp;
    model.offset_ = options.center_targets
                        ? std::accumulate(targets.begin(), targets.end(), 0.0) /
                              static_cast<double>(targets.size())
                        : 0.0;

    Matrix k = gram_matrix(inputs, hp.sigma_f, hp.length_scale);
    for (std::size_t i = 0; i < k.rows(); ++i) k(i, i) += hp.noise_var;
    auto factor = linalg::cholesky_with_jitter(k, kFirstJitter, kMaxJitter);
    if (!factor) throw GprError("fit: covariance not positive definite after jitter");

    Vector centred(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) centred[i] = targets[i] - model.offset_;
    model.lower_ = std::move(factor->lower);
    model.jitter_ = factor->jitter;
    model.alpha_ = linalg::cholesky_solve(model.lower_, centred);

    double fit_term = 0.0;
    double log_det = 0.0;
    for (std::size_t i = 0; i < centred.size(); ++i) {
        fit_term += centred[i] * model.alpha_[i];
        log_det += std::log(model.lower_(i, i));
    }
    const double n = static_cast<double>(centred.size());
    model.lml_ = -0.5 * fit_term - log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);

    model.inputs_ = std::move(inputs);
    model.targets_ = std::move(targets);
    return model;
}

double GprModel::predict_mean(std::span<const double> x) const {
    if (x.size() != inputs_.front().size()) throw DimensionError("predict_mean: dimension mismatch");
    double mean = offset_;
    for (std::size_t i = 0; i < inputs_.size(); ++i)
        mean += se_kernel(x, inputs_[i], hp_.sigma_f, hp_.length_scale) * alpha_[i];
    return mean;
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
    std::vector<double> out;
    if (count == 1) return {lo};
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
    return out;
}

HyperSearch HyperSearch::default_grid(double noise_var) {
    HyperSearch s;
    s.sigma_f_grid = log_space(0.1, 10.0, 7);
    s.length_grid = log_space(0.05, 5.0, 7);
    s.initial = Hyperparams{1.0, 1.0, noise_var};
    return s;
}

Hyperparams optimize_hyperparams(const std::vector<Vector>& inputs, const Vector& targets,
                                 const HyperSearch& search, FitOptions options) {
    if (inputs.size() < 2) throw GprError("optimize_hyperparams: need at least two observations");

    Hyperparams best = search.initial;
    double best_lml = -std::numeric_limits<double>::infinity();
    bool any = false;
    auto consider = [&](const Hyperparams& hp) {
        try {
            const double lml = GprModel::fit(inputs, targets, hp, options).log_marginal_likelihood();
            if (std::isfinite(lml) && (!any || lml > best_lml)) {
                best = hp;
                best_lml = lml;
                any = true;
            }
        } catch (const GprError&) {
        }
    };
    consider(search.initial);
    for (double sf : search.sigma_f_grid)
        for (double l : search.length_grid) consider({sf, l, search.initial.noise_var});
    if (!any) throw GprError("optimize_hyperparams: every candidate failed to factorise");
    return best;
}

}  // namespace radae::gpr
