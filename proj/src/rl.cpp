#include "radae/rl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace radae::rl {

std::size_t state_dimension(StateSpace space) noexcept {
    switch (space) {
        case StateSpace::S1: return 5;
        case StateSpace::S2: return 6;
        case StateSpace::S3: return 3;
        case StateSpace::S4: return 4;
    }
    return 0;
}

void ControllerConfig::validate() const {
    auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
    if (!(gamma > 0.0 && gamma < 1.0)) fail("rl.gamma must lie in (0,1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("rl.epsilon must lie in [0,1]");
    if (!(eta1 < eta2)) fail("rl.eta1 must be smaller than rl.eta2");
    if (!(v1 < v2)) fail("rl.v1 must be smaller than rl.v2");
    if (!(alpha_q >= 0.0 && alpha_q <= 1.0)) fail("rl.alpha_q must lie in [0,1]");
    if (alpha_ema > 1.0) fail("rl.alpha_ema must lie in (0,1]");
    if (m == 0 || m1 == 0 || m2 == 0 || m3 == 0) fail("rl EMA windows must be positive");
    if (!(sigma_delta > 0.0)) fail("rl.sigma_delta must be positive");
    if (refit_every == 0) fail("rl.refit_every must be positive");
    if (max_observations == 0) fail("rl.max_observations must be positive");
    if (gp_noise < 0.0) fail("rl.gp_noise must be non-negative");
}

double ControllerConfig::ema_alpha(std::size_t window) const noexcept {
    if (window == m && alpha_ema > 0.0) return alpha_ema;
    return 2.0 / (static_cast<double>(window) + 1.0);
}

Vector RlState::features(StateSpace space) const {
    switch (space) {
        case StateSpace::S1:
        case StateSpace::S2: {
            Vector f{ema_lg, extra_emas.at(0), extra_emas.at(1), ema_lc, nu1};
            if (space == StateSpace::S2) f.push_back(kl.value_or(0.0));
            return f;
        }
        case StateSpace::S3: return {ema_lg, ema_lc, nu1};
        case StateSpace::S4: return {ema_lg, ema_lc, nu1, kl.value_or(0.0)};
    }
    return {};
}

double ema_update(double prev, double current, double alpha_ema) noexcept {
    return alpha_ema * current + (1.0 - alpha_ema) * prev;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) throw std::invalid_argument("kl_divergence: histogram sizes differ");
    auto check = [](std::span<const double> h) {
        double sum = 0.0;
        for (double v : h) {
            if (!(v >= 0.0)) throw std::invalid_argument("kl_divergence: negative mass");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("kl_divergence: histogram does not sum to 1");
    };
    check(p);
    check(q);
    const double norm = 1.0 + kKlSmoothing * static_cast<double>(q.size());
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        const double qs = (q[i] + kKlSmoothing) / norm;
        kl += p[i] * std::log(p[i] / qs);
    }
    return std::max(kl, 0.0);
}

// --- StateTracker ------------------------------------------------------------

StateTracker::StateTracker(const ControllerConfig& cfg) : cfg_(cfg) {}

void StateTracker::observe(const Observation& obs) {
    for (std::size_t w : {cfg_.m, cfg_.m1, cfg_.m2, cfg_.m3}) {
        if (count_ == 0) {
            lg_[w] = obs.lg;
            lc_[w] = obs.lc;
        } else {
            lg_[w] = ema_update(lg_[w], obs.lg, cfg_.ema_alpha(w));
            lc_[w] = ema_update(lc_[w], obs.lc, cfg_.ema_alpha(w));
        }
    }
    if (!obs.class_histogram.empty()) {
        if (history_.empty()) {
            last_kl_ = 0.0;
        } else {
            Vector mean(obs.class_histogram.size(), 0.0);
            for (const auto& h : history_)
                for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += h[k];
            for (double& v : mean) v /= static_cast<double>(history_.size());
            last_kl_ = kl_divergence(obs.class_histogram, mean);
        }
        history_.push_back(obs.class_histogram);
        while (history_.size() > cfg_.m) history_.pop_front();
    }
    ++count_;
}

double StateTracker::ema_or(std::size_t window, const std::map<std::size_t, double>& emas) const {
    auto it = emas.find(window);
    return it == emas.end() ? 0.0 : it->second;
}

RlState StateTracker::state(double nu1) const {
    RlState s;
    s.nu1 = nu1;
    s.kl = last_kl_;
    if (cfg_.state_space == StateSpace::S1 || cfg_.state_space == StateSpace::S2) {
        s.ema_lg = ema_or(cfg_.m3, lg_);
        s.ema_lc = ema_or(cfg_.m3, lc_);
        s.extra_emas = {ema_or(cfg_.m1, lc_), ema_or(cfg_.m2, lc_)};
    } else {
        s.ema_lg = ema_or(cfg_.m, lg_);
        s.ema_lc = ema_or(cfg_.m, lc_);
    }
    return s;
}

RlState compute_state(std::span<const Observation> history, std::size_t initial_width,
                      const ControllerConfig& cfg) {
    if (history.empty()) throw std::invalid_argument("compute_state: empty history");
    if (initial_width == 0) throw std::invalid_argument("compute_state: zero initial width");
    StateTracker tracker(cfg);
    for (const auto& obs : history) tracker.observe(obs);
    return tracker.state(static_cast<double>(history.back().width1) / static_cast<double>(initial_width));
}

// --- delta and reward ------------------------------------------------------------

double delta_magnitude(double lc_n, double lc_prev, double nu, const ControllerConfig& cfg) {
    const double d = nu - cfg.mu_hat;
    const double envelope = std::exp(-(d * d) / (2.0 * cfg.sigma_delta * cfg.sigma_delta));
    return std::max(0.0, cfg.lambda_delta * envelope * std::abs(lc_n - lc_prev));
}

std::size_t compute_delta(double lc_n, double lc_prev, double nu, const ControllerConfig& cfg) {
    const double raw = delta_magnitude(lc_n, lc_prev, nu, cfg);
    if (!(raw > 0.0)) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(raw)));
}

double compute_reward(double lc_n, double lc_prev, double nu1, const ControllerConfig& cfg) {
    const double e = (1.0 - (lc_n - lc_prev)) * (1.0 - lc_n);
    if (nu1 < cfg.v1 || nu1 > cfg.v2) return e - std::abs(cfg.mu_hat - nu1);
    return e;
}

// --- QModel ------------------------------------------------------------------

double QModel::predict(ActionKind action, std::span<const double> state) const {
    const auto& c = curves_[static_cast<std::size_t>(action)];
    return c ? c->predict_mean(state) : 0.0;
}

std::array<double, kNumActions> QModel::predict_all(std::span<const double> state) const {
    std::array<double, kNumActions> out{};
    for (ActionKind a : kAllActions) out[static_cast<std::size_t>(a)] = predict(a, state);
    return out;
}

void QModel::add_observation(ActionKind action, Vector state, double value) {
    auto& s = samples_[static_cast<std::size_t>(action)];
    s.push_back({std::move(state), value});
    if (s.size() > max_observations_)
        s.erase(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() - max_observations_));
    dirty_[static_cast<std::size_t>(action)] = true;
}

void QModel::refit() {
    // The three curves are independent; each thread owns one slot.
#pragma omp parallel for schedule(static, 1)
    for (int a = 0; a < static_cast<int>(kNumActions); ++a) {
        const auto idx = static_cast<std::size_t>(a);
        if (!dirty_[idx] || samples_[idx].empty()) continue;
        std::vector<Vector> inputs;
        Vector targets;
        for (const auto& s : samples_[idx]) {
            inputs.push_back(s.state);
            targets.push_back(s.value);
        }
        try {
            auto search = gpr::HyperSearch::default_grid(gp_noise_);
            gpr::Hyperparams hp = search.initial;
            if (inputs.size() >= 2) hp = gpr::optimize_hyperparams(inputs, targets, search, fit_);
            curves_[idx] = gpr::GprModel::fit(std::move(inputs), std::move(targets), hp, fit_);
            dirty_[idx] = false;
        } catch (const gpr::GprError&) {
            // Keep the previous curve; the next refit retries.
        }
    }
}

const std::vector<QModel::Sample>& QModel::observations(ActionKind action) const {
    return samples_[static_cast<std::size_t>(action)];
}

const std::optional<gpr::GprModel>& QModel::curve(ActionKind action) const {
    return curves_[static_cast<std::size_t>(action)];
}

double q_update(QModel& q, std::span<const double> s_prev, ActionKind a_prev, double reward,
                std::span<const double> s_new, double alpha_q, double gamma) {
    const auto next = q.predict_all(s_new);
    const double target = reward + gamma * *std::max_element(next.begin(), next.end());
    const double old = q.predict(a_prev, s_prev);
    const double value = (1.0 - alpha_q) * old + alpha_q * target;
    q.add_observation(a_prev, Vector(s_prev.begin(), s_prev.end()), value);
    return value;
}

// --- TabularQ ------------------------------------------------------------------

double TabularQ::value(std::size_t state, ActionKind action) const {
    auto it = table_.find(state);
    return it == table_.end() ? 0.0 : it->second[static_cast<std::size_t>(action)];
}

double TabularQ::max_value(std::size_t state) const {
    auto it = table_.find(state);
    if (it == table_.end()) return 0.0;
    return *std::max_element(it->second.begin(), it->second.end());
}

void TabularQ::set(std::size_t state, ActionKind action, double v) {
    table_[state][static_cast<std::size_t>(action)] = v;
}

double q_update(TabularQ& q, std::size_t s_prev, ActionKind a_prev, double reward, std::size_t s_new,
                double alpha_q, double gamma) {
    const double target = reward + gamma * q.max_value(s_new);
    const double value = (1.0 - alpha_q) * q.value(s_prev, a_prev) + alpha_q * target;
    q.set(s_prev, a_prev, value);
    return value;
}

// --- action selection ------------------------------------------------------------

Selection select_action(const QModel& q, std::span<const double> state, std::size_t n,
                        const ControllerConfig& cfg, Rng& rng) {
    if (n < cfg.eta1) return {ActionKind::Pool, false};
    if (n < cfg.eta2) {
        static constexpr ActionKind rotation[] = {ActionKind::Increment, ActionKind::Merge, ActionKind::Pool};
        return {rotation[(n - cfg.eta1) % 3], false};
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < cfg.epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, kNumActions - 1);
        return {kAllActions[pick(rng)], true};
    }
    const auto values = q.predict_all(state);
    return {kAllActions[argmax(values)], false};
}

// --- controller ----------------------------------------------------------------

RlController::RlController(ControllerConfig cfg, std::size_t initial_width)
    : cfg_(cfg), initial_width_(initial_width), tracker_(cfg), q_(cfg.max_observations, cfg.gp_noise, cfg.center_utilities) {
    if (initial_width_ == 0) throw std::invalid_argument("RlController: zero initial width");
    if (!(cfg_.lambda_delta > 0.0)) cfg_.lambda_delta = 0.5 * static_cast<double>(initial_width_);
    cfg_.validate();
    tracker_ = StateTracker(cfg_);
}

Decision RlController::step(std::size_t n, const Observation& obs, Rng& rng) {
    tracker_.observe(obs);
    const double lc_prev = prev_lc_.value_or(obs.lc);
    prev_lc_ = obs.lc;
    const double nu1 = static_cast<double>(obs.width1) / static_cast<double>(initial_width_);

    Decision d;
    d.n = n;
    if (n < cfg_.eta1) {
        prev_state_.reset();
        prev_action_ = ActionKind::Pool;
        return d;
    }

    RlState state = tracker_.state(nu1);
    const Vector features = state.features(cfg_.state_space);
    d.kl = state.kl;

    const double reward = compute_reward(obs.lc, lc_prev, nu1, cfg_);
    if (prev_state_ && prev_action_) {
        d.reward = reward;
        d.updated_q = q_update(q_, *prev_state_, *prev_action_, reward, features, cfg_.alpha_q, cfg_.gamma);
        const bool refit_now = n < cfg_.eta2 || (n - cfg_.eta2) % cfg_.refit_every == 0;
        if (refit_now) q_.refit();
    }

    d.predicted_q = q_.predict_all(features);
    const Selection sel = select_action(q_, features, n, cfg_, rng);
    d.action = sel.action;
    d.explored = sel.explored;

    const std::size_t delta = compute_delta(obs.lc, lc_prev, nu1, cfg_);
    if (d.action == ActionKind::Increment) d.delta_inc = delta;
    if (d.action == ActionKind::Merge) d.delta_mrg = std::min(delta, obs.width1 / 2);

    d.state = std::move(state);
    prev_state_ = features;
    prev_action_ = d.action;
    return d;
}

}  // namespace radae::rl
