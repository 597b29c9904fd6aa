#pragma once

// Merge-incremental baseline: structural change fires only when the hard
// example pool overflows.

#include <deque>
#include <optional>

#include "radae/adapt.hpp"
#include "radae/nn.hpp"
#include "radae/pools.hpp"

namespace radae {

struct MiDaeState {
    std::size_t delta_n = 30;
    double merge_ratio = 0.2;
    double eps1 = 0.01;
    double eps2 = 0.001;
    std::size_t pool_threshold = 10000;  // |B| > threshold triggers an event
    std::size_t mu_window = 10000;       // examples in the rolling reconstruction average

    std::deque<double> recent_losses;
    double recent_sum = 0.0;
    std::optional<double> last_event_error;

    void validate() const;
    /// Mean per-example reconstruction loss over the window.
    double mu() const noexcept;
    void record_losses(std::span<const double> losses);
};

/// Additive-increase / halving update of the node-change magnitude.
std::size_t update_rule(std::size_t delta_n, double e_t, double e_prev, double eps1, double eps2);

struct MiDaeEvent {
    bool fired = false;
    std::size_t merged = 0;
    std::size_t added = 0;
    std::size_t hard_added = 0;
};

/// One batch of the baseline: collect hard examples, on overflow merge
/// ceil(merge_ratio * delta_n) pairs, add delta_n nodes trained on the hard pool,
/// update delta_n and clear the pool; then fine-tune the whole network on `batch`.
MiDaeEvent merge_inc_step(Network& net, const BatchPtr& batch, PoolSet& pools, MiDaeState& state,
                          double lambda_hybrid, Rng& rng, const GreedyOptions& greedy = {});

}  // namespace radae
