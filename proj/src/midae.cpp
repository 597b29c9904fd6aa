#include "radae/midae.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace radae {

void MiDaeState::validate() const {
    if (!(eps1 > eps2 && eps2 >= 0.0)) throw std::invalid_argument("midae: need eps1 > eps2 >= 0");
    if (!(merge_ratio >= 0.0)) throw std::invalid_argument("midae: merge ratio must be non-negative");
    if (mu_window == 0) throw std::invalid_argument("midae: mu window must be positive");
}

double MiDaeState::mu() const noexcept {
    return recent_losses.empty() ? 0.0 : recent_sum / static_cast<double>(recent_losses.size());
}

void MiDaeState::record_losses(std::span<const double> losses) {
    for (double l : losses) {
        recent_losses.push_back(l);
        recent_sum += l;
    }
    while (recent_losses.size() > mu_window) {
        recent_sum -= recent_losses.front();
        recent_losses.pop_front();
    }
}

std::size_t update_rule(std::size_t delta_n, double e_t, double e_prev, double eps1, double eps2) {
    if (!(e_prev > 0.0)) throw std::invalid_argument("update_rule: previous error must be positive");
    const double ratio = e_t / e_prev;
    if (ratio < 1.0 - eps1) return delta_n + 30;
    if (ratio > 1.0 - eps2) return delta_n / 2;
    return delta_n;
}

MiDaeEvent merge_inc_step(Network& net, const BatchPtr& batch, PoolSet& pools, MiDaeState& state,
                          double lambda_hybrid, Rng& rng, const GreedyOptions& greedy) {
    MiDaeEvent event;
    const Vector losses = per_example_generative(net, batch->inputs);
    state.record_losses(losses);
    event.hard_added = update_hard(pools, batch, losses);

    if (pools.hard.size() > state.pool_threshold) {
        event.fired = true;
        const std::size_t width = net.layers.front().hidden();
        const auto wanted = static_cast<std::size_t>(
            std::ceil(state.merge_ratio * static_cast<double>(state.delta_n)));
        event.merged = std::min(wanted, width / 2);
        merge(net, event.merged);

        auto hard = std::make_shared<const DataBatch>(hard_examples_batch(pools));
        const BatchPtr training[] = {hard};
        increment(net, state.delta_n, training, rng, greedy);
        event.added = state.delta_n;

        const double error = state.mu();
        if (state.last_event_error && *state.last_event_error > 0.0)
            state.delta_n = update_rule(state.delta_n, error, *state.last_event_error, state.eps1, state.eps2);
        state.last_event_error = error;
        pools.hard.clear();
    }

    finetune(net, *batch, lambda_hybrid);
    return event;
}

}  // namespace radae
