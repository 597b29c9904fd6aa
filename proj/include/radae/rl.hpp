#pragma once

// Q-learning controller that picks a structural action per batch.
//
// Batches before eta1 always Pool. Between eta1 and eta2 the actions rotate
// Increment, Merge, Pool to seed the utility estimates. From eta2 on, the action
// with the largest GPR-predicted utility is taken with probability 1 - epsilon.

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "radae/adapt.hpp"
#include "radae/gpr.hpp"
#include "radae/nn.hpp"

namespace radae::rl {

enum class StateSpace { S1 = 1, S2 = 2, S3 = 3, S4 = 4 };

/// 5, 6, 3 and 4 features respectively.
std::size_t state_dimension(StateSpace space) noexcept;

struct ControllerConfig {
    std::size_t m = 30;  // EMA window of the S3/S4 state
    std::size_t m1 = 5;  // extra windows of S1/S2
    std::size_t m2 = 15;
    std::size_t m3 = 30;
    std::size_t eta1 = 30;
    std::size_t eta2 = 60;
    double gamma = 0.9;
    double alpha_q = 0.5;
    double alpha_ema = 0.0;     // <= 0 selects 2 / (m + 1)
    double epsilon = 0.1;
    double lambda_delta = 0.0;  // <= 0 selects half the initial layer-1 width
    double mu_hat = 1.0;
    double sigma_delta = 0.5;
    double v1 = 0.5;
    double v2 = 2.0;
    StateSpace state_space = StateSpace::S3;
    std::size_t refit_every = 10;
    std::size_t max_observations = 500;
    double gp_noise = 1e-2;
    // Fit the utility curves around their sample mean. With a zero prior
    // instead, states far from any sample predict a utility of 0.
    bool center_utilities = true;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
    /// Smoothing coefficient for an EMA over `window` batches.
    double ema_alpha(std::size_t window) const noexcept;
};

struct RlState {
    double ema_lg = 0.0;
    double ema_lc = 0.0;
    double nu1 = 1.0;
    std::optional<double> kl;
    std::vector<double> extra_emas;  // S1/S2: classification EMAs over m1 and m2

    /// Feature vector in the layout of the configured state space.
    Vector features(StateSpace space) const;
};

double ema_update(double prev, double current, double alpha_ema) noexcept;

/// KL(P || Q) with Q smoothed by kKlSmoothing. Throws std::invalid_argument when
/// either histogram is negative, mis-sized or does not sum to 1.
inline constexpr double kKlSmoothing = 1e-6;
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Per-batch inputs to the controller, measured on the batch before training.
struct Observation {
    double lg = 0.0;
    double lc = 0.0;
    std::size_t width1 = 0;
    Vector class_histogram;
};

/// Recursive error averages and the class-histogram history behind RlState.
class StateTracker {
public:
    explicit StateTracker(const ControllerConfig& cfg);
    void observe(const Observation& obs);
    RlState state(double nu1) const;
    std::size_t observations() const noexcept { return count_; }

private:
    double ema_or(std::size_t window, const std::map<std::size_t, double>& emas) const;

    ControllerConfig cfg_;
    std::map<std::size_t, double> lg_;
    std::map<std::size_t, double> lc_;
    std::deque<Vector> history_;  // histograms of up to m previous batches
    std::optional<double> last_kl_;
    std::size_t count_ = 0;
};

RlState compute_state(std::span<const Observation> history, std::size_t initial_width,
                      const ControllerConfig& cfg);

/// lambda * exp(-(nu - mu_hat)^2 / (2 sigma^2)) * |lc_n - lc_prev|
double delta_magnitude(double lc_n, double lc_prev, double nu, const ControllerConfig& cfg);
/// Rounded node count: 0 when the magnitude is 0, otherwise at least 1.
std::size_t compute_delta(double lc_n, double lc_prev, double nu, const ControllerConfig& cfg);

/// (1 - (lc_n - lc_prev)) * (1 - lc_n), less |mu_hat - nu1| outside [v1, v2].
double compute_reward(double lc_n, double lc_prev, double nu1, const ControllerConfig& cfg);

/// Per-action (state, utility) observations with a GPR curve fitted to each.
class QModel {
public:
    struct Sample {
        Vector state;
        double value = 0.0;
    };

    explicit QModel(std::size_t max_observations = 500, double gp_noise = 1e-2, bool center_targets = true)
        : max_observations_(max_observations), gp_noise_(gp_noise), fit_{center_targets} {}

    /// Utility predicted by the action's curve; 0 before the first fit.
    double predict(ActionKind action, std::span<const double> state) const;
    std::array<double, kNumActions> predict_all(std::span<const double> state) const;

    void add_observation(ActionKind action, Vector state, double value);
    /// Refits every curve whose observations changed since its last fit.
    void refit();

    const std::vector<Sample>& observations(ActionKind action) const;
    const std::optional<gpr::GprModel>& curve(ActionKind action) const;
    bool has_curve(ActionKind action) const { return curve(action).has_value(); }

private:
    std::size_t max_observations_;
    double gp_noise_;
    gpr::FitOptions fit_;
    std::array<std::vector<Sample>, kNumActions> samples_;
    std::array<std::optional<gpr::GprModel>, kNumActions> curves_;
    std::array<bool, kNumActions> dirty_{};
};

/// Applies Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')) and
/// stores the result as a new observation for `a_prev`. Returns the new value.
double q_update(QModel& q, std::span<const double> s_prev, ActionKind a_prev, double reward,
                std::span<const double> s_new, double alpha_q, double gamma);

/// Lookup-table Q function over discrete states.
class TabularQ {
public:
    double value(std::size_t state, ActionKind action) const;
    double max_value(std::size_t state) const;
    void set(std::size_t state, ActionKind action, double v);

private:
    std::map<std::size_t, std::array<double, kNumActions>> table_;
};

double q_update(TabularQ& q, std::size_t s_prev, ActionKind a_prev, double reward, std::size_t s_new,
                double alpha_q, double gamma);

struct Selection {
    ActionKind action = ActionKind::Pool;
    bool explored = false;
};

/// Phase-dependent action choice. Consumes random numbers only in the
/// epsilon-greedy phase.
Selection select_action(const QModel& q, std::span<const double> state, std::size_t n,
                        const ControllerConfig& cfg, Rng& rng);

struct Decision {
    std::size_t n = 0;
    ActionKind action = ActionKind::Pool;
    std::size_t delta_inc = 0;
    std::size_t delta_mrg = 0;
    std::optional<RlState> state;
    std::optional<double> reward;          // reward credited to the previous action
    std::optional<double> updated_q;       // new utility of (s_prev, a_prev)
    std::array<double, kNumActions> predicted_q{};  // at the new state; zero before any curve exists
    bool explored = false;
    std::optional<double> kl;
};

/// Runs the per-batch control step and owns the learned utility model.
class RlController {
public:
    RlController(ControllerConfig cfg, std::size_t initial_width);

    /// Feeds batch n's pre-training errors (n counts from 0) and returns the action to apply.
    Decision step(std::size_t n, const Observation& obs, Rng& rng);

    const ControllerConfig& config() const noexcept { return cfg_; }
    const QModel& q() const noexcept { return q_; }
    std::size_t initial_width() const noexcept { return initial_width_; }

private:
    ControllerConfig cfg_;
    std::size_t initial_width_;
    StateTracker tracker_;
    QModel q_;
    std::optional<Vector> prev_state_;
    std::optional<ActionKind> prev_action_;
    std::optional<double> prev_lc_;
};

}  // namespace radae::rl
