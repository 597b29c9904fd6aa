#include "radae/pools.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace radae {

namespace {

std::size_t total_examples(const std::vector<BatchPtr>& pool) {
    std::size_t n = 0;
    for (const auto& b : pool) n += b->size();
    return n;
}

void evict_oldest_over(std::vector<BatchPtr>& pool, std::size_t tau, std::size_t* evicted = nullptr) {
    std::size_t total = total_examples(pool);
    std::size_t drop = 0;
    while (total > tau && pool.size() - drop > 1) {
        total -= pool[drop]->size();
        ++drop;
    }
    pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(drop));
    if (evicted) *evicted = drop;
}

}  // namespace

std::size_t PoolSet::recent_examples() const noexcept { return total_examples(recent); }
std::size_t PoolSet::diverse_examples() const noexcept { return total_examples(diverse); }

double batch_distance(const DataBatch& a, const DataBatch& b) {
    if (a.classes() != b.classes()) throw DimensionError("batch_distance: class count mismatch");
    const Vector ha = a.class_histogram();
    const Vector hb = b.class_histogram();
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < ha.size(); ++k) {
        dot += ha[k] * hb[k];
        na += ha[k] * ha[k];
        nb += hb[k] * hb[k];
    }
    const double cos = dot / std::sqrt(na * nb);  // one root keeps d(a, a) exactly 0
    return std::clamp(1.0 - cos, 0.0, 1.0);
}

void update_recent(PoolSet& pools, BatchPtr batch) {
    pools.recent.push_back(std::move(batch));
    evict_oldest_over(pools.recent, pools.tau);
}

DiverseUpdate update_diverse(PoolSet& pools, BatchPtr batch) {
    DiverseUpdate result;
    if (pools.diverse.empty()) {
        pools.diverse.push_back(std::move(batch));
        result.outcome = DiverseOutcome::InsertedIntoEmpty;
    } else {
        const bool far = std::all_of(pools.diverse.begin(), pools.diverse.end(), [&](const BatchPtr& member) {
            return batch_distance(*batch, *member) > pools.lambda_threshold;
        });
        if (!far) return result;
        pools.diverse.push_back(std::move(batch));
        result.outcome = DiverseOutcome::Inserted;
    }
    evict_oldest_over(pools.diverse, pools.tau, &result.evicted);
    return result;
}

std::size_t update_hard(PoolSet& pools, const BatchPtr& batch, std::span<const double> per_example_lgen) {
    if (per_example_lgen.size() != batch->size())
        throw DimensionError("update_hard: loss vector length differs from batch size");
    if (per_example_lgen.empty()) return 0;
    const double mean = std::accumulate(per_example_lgen.begin(), per_example_lgen.end(), 0.0) /
                        static_cast<double>(per_example_lgen.size());
    std::size_t added = 0;
    for (std::size_t i = 0; i < per_example_lgen.size(); ++i) {
        if (per_example_lgen[i] > mean) {
            pools.hard.push_back({batch, i});
            ++added;
        }
    }
    return added;
}

DataBatch hard_examples_batch(const PoolSet& pools) {
    DataBatch out;
    if (pools.hard.empty()) return out;
    const auto& first = *pools.hard.front().batch;
    out.inputs = Matrix(pools.hard.size(), first.dims());
    out.labels = Matrix(pools.hard.size(), first.classes());
    for (std::size_t i = 0; i < pools.hard.size(); ++i) {
        const auto& [batch, row] = pools.hard[i];
        std::copy(batch->inputs.row(row).begin(), batch->inputs.row(row).end(), out.inputs.row(i).begin());
        std::copy(batch->labels.row(row).begin(), batch->labels.row(row).end(), out.labels.row(i).begin());
        out.seq_id = std::max(out.seq_id, batch->seq_id);
    }
    return out;
}

}  // namespace radae
