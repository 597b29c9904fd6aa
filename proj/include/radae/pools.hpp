#pragma once

// Bounded example pools: recent (B_r), diverse (B_ft) and hard examples (B).

#include <span>
#include <vector>

#include "radae/nn.hpp"

namespace radae {

struct HardExample {
    BatchPtr batch;
    std::size_t row = 0;
};

struct PoolSet {
    std::vector<BatchPtr> recent;   // oldest first
    std::vector<BatchPtr> diverse;  // insertion order
    std::vector<HardExample> hard;
    std::size_t tau = 10000;        // capacity in examples (threshold for `hard`)
    double lambda_threshold = 0.7;  // minimum distance for diverse membership

    std::size_t recent_examples() const noexcept;
    std::size_t diverse_examples() const noexcept;
};

/// 1 - cosine similarity of the two batches' class histograms, in [0,1].
double batch_distance(const DataBatch& a, const DataBatch& b);

/// Appends `batch` and evicts the oldest whole batches until at most tau examples
/// remain. The newest batch is always kept, even when it alone exceeds tau.
void update_recent(PoolSet& pools, BatchPtr batch);

enum class DiverseOutcome { InsertedIntoEmpty, Inserted, Unchanged };

struct DiverseUpdate {
    DiverseOutcome outcome = DiverseOutcome::Unchanged;
    std::size_t evicted = 0;
};

/// Inserts `batch` when the pool is empty or it is farther than lambda_threshold
/// from every member, then evicts oldest-first while over tau examples.
DiverseUpdate update_diverse(PoolSet& pools, BatchPtr batch);

/// Appends every example whose loss is strictly above the batch mean. Returns the
/// number added.
std::size_t update_hard(PoolSet& pools, const BatchPtr& batch, std::span<const double> per_example_lgen);

/// Materialises the hard pool as a batch (seq_id of the newest source batch).
DataBatch hard_examples_batch(const PoolSet& pools);

}  // namespace radae
