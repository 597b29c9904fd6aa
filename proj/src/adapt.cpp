#include "radae/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace radae {

std::string_view to_string(ActionKind kind) noexcept {
    switch (kind) {
        case ActionKind::Pool: return "pool";
        case ActionKind::Increment: return "increment";
        case ActionKind::Merge: return "merge";
    }
    return "?";
}

std::optional<ActionKind> parse_action(std::string_view name) noexcept {
    for (ActionKind k : kAllActions)
        if (to_string(k) == name) return k;
    return std::nullopt;
}

namespace {

// The weights that consume hidden layer 1: layer 2's encoder, or the softmax layer.
Matrix& downstream_weights(Network& net) {
    return net.layers.size() > 1 ? net.layers[1].W : net.out_W;
}

void train_new_rows(Network& net, std::size_t first_new, std::span<const BatchPtr> pool, int epochs,
                    Rng& rng) {
    auto& layer = net.layers.front();
    const std::size_t mb = std::max<std::size_t>(1, net.minibatch_size);
    for (int e = 0; e < epochs; ++e) {
        for (const auto& batch : pool) {
            for (std::size_t begin = 0; begin < batch->size(); begin += mb) {
                const std::size_t end = std::min(batch->size(), begin + mb);
                Matrix clean = row_slice(batch->inputs, begin, end);
                Matrix noisy = clean;
                corrupt_in_place(noisy, net.corruption_p, rng);
                LayerGrad g = LayerGrad::zeros_like(layer);
                dae_loss_grad(layer, clean, noisy, &g);
                for (std::size_t r = first_new; r < layer.hidden(); ++r) {
                    auto w = layer.W.row(r);
                    auto gw = g.W.row(r);
                    for (std::size_t c = 0; c < w.size(); ++c) w[c] -= net.learning_rate * gw[c];
                    layer.b[r] -= net.learning_rate * g.b[r];
                }
            }
        }
    }
}

void train_new_columns(Network& net, std::size_t first_new, std::span<const BatchPtr> pool,
                       int epochs, double lambda) {
    const std::size_t mb = std::max<std::size_t>(1, net.minibatch_size);
    const bool deep = net.layers.size() > 1;
    for (int e = 0; e < epochs; ++e) {
        for (const auto& batch : pool) {
            for (std::size_t begin = 0; begin < batch->size(); begin += mb) {
                const std::size_t end = std::min(batch->size(), begin + mb);
                NetworkGrad g = NetworkGrad::zeros_like(net);
                hybrid_loss_grad(net, row_slice(batch->inputs, begin, end),
                                 row_slice(batch->labels, begin, end), lambda, &g);
                Matrix& w = downstream_weights(net);
                const Matrix& gw = deep ? g.layers[1].W : g.out_W;
                for (std::size_t r = 0; r < w.rows(); ++r)
                    for (std::size_t c = first_new; c < w.cols(); ++c)
                        w(r, c) -= net.learning_rate * gw(r, c);
            }
        }
    }
}

}  // namespace

void increment(Network& net, std::size_t delta, std::span<const BatchPtr> training_pool, Rng& rng,
               const GreedyOptions& options) {
    if (delta == 0) return;
    if (training_pool.empty()) throw std::invalid_argument("increment: empty training pool");
    if (!net.well_formed()) throw std::invalid_argument("increment: malformed network");

    auto& first = net.layers.front();
    const std::size_t old_width = first.hidden();
    const std::size_t new_width = old_width + delta;
    const std::size_t in = first.input_dim();

    first.W.append_rows(delta);
    first.b.resize(new_width, 0.0);
    {
        std::uniform_real_distribution<double> dist(-sigmoid_init_bound(in, new_width),
                                                    sigmoid_init_bound(in, new_width));
        for (std::size_t r = old_width; r < new_width; ++r)
            for (double& v : first.W.row(r)) v = dist(rng);
    }

    if (net.layers.size() > 1) {
        auto& second = net.layers[1];
        second.W.append_cols(delta);
        second.b_rec.resize(new_width, 0.0);
        const double bound = sigmoid_init_bound(new_width, second.hidden());
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t r = 0; r < second.W.rows(); ++r)
            for (std::size_t c = old_width; c < new_width; ++c) second.W(r, c) = dist(rng);
    } else {
        // Softmax columns start at zero like the rest of the output layer.
        net.out_W.append_cols(delta);
    }

    train_new_rows(net, old_width, training_pool, options.generative_epochs, rng);
    train_new_columns(net, old_width, training_pool, options.discriminative_epochs, 0.0);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_distance: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<std::size_t, std::size_t>> closest_pairs(const Matrix& w, std::size_t count) {
    const std::size_t n = w.rows();
    if (2 * count > n) throw std::invalid_argument("closest_pairs: not enough rows");
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    cand.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) cand.emplace_back(cosine_distance(w.row(i), w.row(j)), i, j);
    std::sort(cand.begin(), cand.end());

    std::vector<bool> used(n, false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [d, i, j] : cand) {
        if (pairs.size() == count) break;
        if (used[i] || used[j]) continue;
        used[i] = used[j] = true;
        pairs.emplace_back(i, j);
    }
    return pairs;
}

void merge(Network& net, std::size_t delta) {
    if (delta == 0) return;
    if (!net.well_formed()) throw std::invalid_argument("merge: malformed network");
    auto& first = net.layers.front();
    if (first.hidden() < 2 * delta) throw std::invalid_argument("merge: layer narrower than 2 * delta");

    const auto pairs = closest_pairs(first.W, delta);
    Matrix& down = downstream_weights(net);
    Vector* down_rec = net.layers.size() > 1 ? &net.layers[1].b_rec : nullptr;

    std::vector<bool> dropped(first.hidden(), false);
    for (const auto& [i, j] : pairs) {
        auto wi = first.W.row(i);
        auto wj = first.W.row(j);
        for (std::size_t c = 0; c < wi.size(); ++c) wi[c] = 0.5 * (wi[c] + wj[c]);
        first.b[i] = 0.5 * (first.b[i] + first.b[j]);
        for (std::size_t r = 0; r < down.rows(); ++r) down(r, i) += down(r, j);
        if (down_rec) (*down_rec)[i] = 0.5 * ((*down_rec)[i] + (*down_rec)[j]);
        dropped[j] = true;
    }

    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < dropped.size(); ++r)
        if (!dropped[r]) keep.push_back(r);

    first.W = first.W.select_rows(keep);
    Vector b;
    for (std::size_t r : keep) b.push_back(first.b[r]);
    first.b = std::move(b);
    down = down.select_cols(keep);
    if (down_rec) {
        Vector rec;
        for (std::size_t r : keep) rec.push_back((*down_rec)[r]);
        *down_rec = std::move(rec);
    }
}

bool pool_finetune(Network& net, std::span<const BatchPtr> diverse_pool, double lambda_hybrid) {
    if (diverse_pool.empty()) return false;
    for (const auto& batch : diverse_pool) finetune(net, *batch, lambda_hybrid);
    return true;
}

}  // namespace radae
