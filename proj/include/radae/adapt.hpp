#pragma once

// Structural actions on the first hidden layer: Pool, Increment and Merge.

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "radae/nn.hpp"

namespace radae {

enum class ActionKind { Pool = 0, Increment = 1, Merge = 2 };

inline constexpr std::size_t kNumActions = 3;
inline constexpr ActionKind kAllActions[kNumActions] = {ActionKind::Pool, ActionKind::Increment,
                                                         ActionKind::Merge};

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> parse_action(std::string_view name) noexcept;

struct StructuralAction {
    ActionKind kind = ActionKind::Pool;
    std::size_t count = 0;  // nodes added (Increment) or pairs merged (Merge); 0 for Pool

    static StructuralAction pool() { return {ActionKind::Pool, 0}; }
    static StructuralAction increment(std::size_t n) { return {ActionKind::Increment, n}; }
    static StructuralAction merge(std::size_t n) { return {ActionKind::Merge, n}; }
    /// count == 0 exactly when kind == Pool.
    bool valid() const noexcept { return (count == 0) == (kind == ActionKind::Pool); }

    friend bool operator==(const StructuralAction&, const StructuralAction&) = default;
};

struct GreedyOptions {
    int generative_epochs = 1;
    int discriminative_epochs = 1;
};

/// Adds `delta` nodes to hidden layer 1 and trains only the new parameters on
/// `training_pool`: new encoder rows with the denoising objective, then the new
/// downstream columns with the discriminative objective. Existing parameters are
/// left bitwise unchanged. Throws std::invalid_argument on an empty pool when
/// delta > 0.
void increment(Network& net, std::size_t delta, std::span<const BatchPtr> training_pool, Rng& rng,
               const GreedyOptions& options = {});

/// 1 - cos(a, b); 1 when either vector is zero.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Greedy closest-pair selection over the rows of `w`: repeatedly takes the
/// globally closest unused pair, ties to the lowest (i, j). Pairs have i < j.
std::vector<std::pair<std::size_t, std::size_t>> closest_pairs(const Matrix& w, std::size_t count);

/// Merges `delta` closest node pairs of hidden layer 1. Each pair becomes one node
/// at the lower index: encoder rows, biases and downstream reconstruction biases
/// are averaged, downstream weight columns are summed. Throws std::invalid_argument
/// when the layer has fewer than 2 * delta nodes.
void merge(Network& net, std::size_t delta);

/// One hybrid fine-tuning pass over every batch of `diverse_pool` in order.
/// Returns false (and leaves the network untouched) when the pool is empty.
[[nodiscard]] bool pool_finetune(Network& net, std::span<const BatchPtr> diverse_pool,
                                 double lambda_hybrid);

}  // namespace radae
