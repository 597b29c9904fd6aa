#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "radae/adapt.hpp"

using namespace radae;

namespace {

Matrix random_inputs(std::size_t n, std::size_t d, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(n, d);
    for (double& v : m.flat()) v = u(rng);
    return m;
}

BatchPtr random_batch(std::size_t n, std::size_t d, std::size_t k, Rng& rng, std::size_t seq = 1) {
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng() % k;
    return std::make_shared<const DataBatch>(DataBatch::from_labels(seq, random_inputs(n, d, rng), labels, k));
}

void randomize(Network& net, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& l : net.layers) {
        for (double& v : l.W.flat()) v = u(rng);
        for (double& v : l.b) v = u(rng);
        for (double& v : l.b_rec) v = u(rng);
    }
    for (double& v : net.out_W.flat()) v = u(rng);
    for (double& v : net.out_b) v = u(rng);
}

double sup_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.flat().size(); ++i) m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
    return m;
}

Matrix& downstream(Network& net) { return net.layers.size() > 1 ? net.layers[1].W : net.out_W; }

/// Greedy pairing by exhaustive search at every step.
std::vector<std::pair<std::size_t, std::size_t>> brute_pairs(const Matrix& w, std::size_t count) {
    std::vector<oracle::Vec> rows;
    for (std::size_t r = 0; r < w.rows(); ++r) rows.emplace_back(w.row(r).begin(), w.row(r).end());
    std::vector<bool> used(rows.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t step = 0; step < count; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::pair<std::size_t, std::size_t> arg{0, 0};
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                if (used[i] || used[j]) continue;
                const double d = oracle::cosine_dist(rows[i], rows[j]);
                if (d < best) best = d, arg = {i, j};
            }
        used[arg.first] = used[arg.second] = true;
        out.push_back(arg);
    }
    return out;
}

void permute_first_layer(Network& net, const std::vector<std::size_t>& perm) {
    auto& first = net.layers.front();
    first.W = first.W.select_rows(perm);
    Vector b(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) b[i] = first.b[perm[i]];
    first.b = b;
    downstream(net) = downstream(net).select_cols(perm);
    if (net.layers.size() > 1) {
        Vector rec(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) rec[i] = net.layers[1].b_rec[perm[i]];
        net.layers[1].b_rec = rec;
    }
}

}  // namespace

TEST_CASE("StructuralAction validity") {
    CHECK(StructuralAction::pool().valid());
    CHECK(StructuralAction::increment(3).valid());
    CHECK(StructuralAction::merge(1).valid());
    CHECK_FALSE(StructuralAction::increment(0).valid());
    CHECK_FALSE((StructuralAction{ActionKind::Pool, 2}).valid());
    for (ActionKind k : kAllActions) CHECK(parse_action(to_string(k)) == k);
    CHECK_FALSE(parse_action("split").has_value());
}

TEST_CASE("increment by zero leaves the net bitwise unchanged") {
    Rng rng(1);
    std::vector<std::size_t> widths{10, 6};
    Network net = Network::create(5, widths, 3, rng);
    const Network before = net;
    increment(net, 0, std::vector<BatchPtr>{}, rng);
    CHECK(net == before);
}

TEST_CASE("increment bookkeeping and empty pool") {
    Rng rng(2);
    std::vector<BatchPtr> pool{random_batch(30, 5, 3, rng)};
    for (std::size_t depth : {1u, 2u, 3u}) {
        std::vector<std::size_t> widths(depth, 10);
        Network net = Network::create(5, widths, 3, rng);
        increment(net, 3, pool, rng);
        CHECK(net.well_formed());
        CHECK(net.layers[0].hidden() == 13);
        CHECK(net.layers[0].b.size() == 13);
        CHECK(net.layers[0].b_rec.size() == 5);
        CHECK(downstream(net).cols() == 13);
        if (depth > 1) CHECK(net.layers[1].b_rec.size() == 13);
        CHECK_THROWS_AS(increment(net, 2, std::vector<BatchPtr>{}, rng), std::invalid_argument);
    }
}

TEST_CASE("increment leaves existing parameters untouched") {
    Rng rng(3);
    std::vector<BatchPtr> pool{random_batch(40, 6, 3, rng, 1), random_batch(40, 6, 3, rng, 2)};
    for (std::size_t depth : {1u, 2u}) {
        std::vector<std::size_t> widths(depth, 7);
        Network net = Network::create(6, widths, 3, rng);
        randomize(net, rng);
        const Network before = net;
        increment(net, 4, pool, rng);
        const auto& f0 = before.layers[0];
        const auto& f1 = net.layers[0];
        for (std::size_t r = 0; r < 7; ++r) {
            for (std::size_t c = 0; c < 6; ++c) CHECK(f1.W(r, c) == f0.W(r, c));
            CHECK(f1.b[r] == f0.b[r]);
        }
        CHECK(f1.b_rec == f0.b_rec);
        const Matrix& d0 = depth > 1 ? before.layers[1].W : before.out_W;
        const Matrix& d1 = depth > 1 ? net.layers[1].W : net.out_W;
        for (std::size_t r = 0; r < d0.rows(); ++r)
            for (std::size_t c = 0; c < 7; ++c) CHECK(d1(r, c) == d0(r, c));
        if (depth > 1) {
            CHECK(net.layers[1].b == before.layers[1].b);
            for (std::size_t i = 0; i < 7; ++i) CHECK(net.layers[1].b_rec[i] == before.layers[1].b_rec[i]);
            CHECK(net.out_W == before.out_W);
        }
        CHECK(net.out_b == before.out_b);
    }
}

TEST_CASE("zeroing the new downstream columns restores the old predictions") {
    Rng rng(4);
    std::vector<BatchPtr> pool{random_batch(50, 6, 3, rng)};
    const Matrix probe = random_inputs(30, 6, rng);
    for (std::size_t depth : {1u, 2u, 3u}) {
        std::vector<std::size_t> widths(depth, 8);
        Network net = Network::create(6, widths, 3, rng);
        randomize(net, rng);
        const Matrix old_pred = predict_batch(net, probe);
        increment(net, 5, pool, rng);
        Matrix& d = downstream(net);
        bool new_cols_used = false;
        for (std::size_t r = 0; r < d.rows(); ++r)
            for (std::size_t c = 8; c < 13; ++c) {
                new_cols_used |= d(r, c) != 0.0;
                d(r, c) = 0.0;
            }
        CHECK(new_cols_used);
        CHECK(sup_diff(predict_batch(net, probe), old_pred) <= 1e-10);
    }
}

TEST_CASE("merge by zero is a no-op and too-wide merges throw") {
    Rng rng(5);
    std::vector<std::size_t> widths{5};
    Network net = Network::create(4, widths, 2, rng);
    const Network before = net;
    merge(net, 0);
    CHECK(net == before);
    CHECK_THROWS_AS(merge(net, 3), std::invalid_argument);
    CHECK(net == before);
}

TEST_CASE("duplicate nodes merge into one equivalent node") {
    Rng rng(6);
    const Matrix probe = random_inputs(40, 6, rng);
    for (std::size_t depth : {1u, 2u}) {
        std::vector<std::size_t> widths(depth, 6);
        Network net = Network::create(6, widths, 3, rng);
        randomize(net, rng);
        auto& first = net.layers[0];
        std::copy(first.W.row(1).begin(), first.W.row(1).end(), first.W.row(4).begin());
        first.b[4] = first.b[1];
        Matrix& d = downstream(net);
        for (std::size_t r = 0; r < d.rows(); ++r) d(r, 4) = d(r, 1);
        if (depth > 1) net.layers[1].b_rec[4] = net.layers[1].b_rec[1];

        const Matrix before = predict_batch(net, probe);
        const LayerParams layer_before = net.layers[0];
        merge(net, 1);
        CHECK(net.layers[0].hidden() == 5);
        for (std::size_t c = 0; c < 6; ++c) CHECK(net.layers[0].W(1, c) == layer_before.W(1, c));
        CHECK(net.layers[0].b[1] == layer_before.b[1]);
        CHECK(sup_diff(predict_batch(net, probe), before) <= 1e-6);
    }
}

TEST_CASE("merge pairs match an exhaustive greedy search") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t h = 2 + rng() % 7;  // 2..8
        const std::size_t delta = 1 + rng() % (h / 2);
        Matrix w = random_inputs(h, 4, rng);
        for (double& v : w.flat()) v = 2.0 * v - 1.0;
        const auto got = closest_pairs(w, delta);
        CHECK(got == brute_pairs(w, delta));
    }
}

TEST_CASE("merge combines rows, biases and columns as documented") {
    Rng rng(8);
    std::vector<std::size_t> widths{6, 4};
    Network net = Network::create(5, widths, 3, rng);
    randomize(net, rng);
    const Network before = net;
    const auto pairs = brute_pairs(before.layers[0].W, 2);
    merge(net, 2);
    REQUIRE(net.layers[0].hidden() == 4);
    CHECK(net.well_formed());

    std::vector<bool> dropped(6, false);
    for (auto [i, j] : pairs) dropped[j] = true;
    std::vector<std::size_t> survivors;
    for (std::size_t r = 0; r < 6; ++r)
        if (!dropped[r]) survivors.push_back(r);

    for (std::size_t k = 0; k < survivors.size(); ++k) {
        const std::size_t r = survivors[k];
        std::size_t partner = r;
        for (auto [i, j] : pairs)
            if (i == r) partner = j;
        const auto& w0 = before.layers[0].W;
        for (std::size_t c = 0; c < 5; ++c) {
            const double expect = partner == r ? w0(r, c) : 0.5 * (w0(r, c) + w0(partner, c));
            CHECK(net.layers[0].W(k, c) == doctest::Approx(expect).epsilon(1e-15));
        }
        const double eb = partner == r ? before.layers[0].b[r] : 0.5 * (before.layers[0].b[r] + before.layers[0].b[partner]);
        CHECK(net.layers[0].b[k] == doctest::Approx(eb).epsilon(1e-15));
        const auto& br = before.layers[1].b_rec;
        const double erec = partner == r ? br[r] : 0.5 * (br[r] + br[partner]);
        CHECK(net.layers[1].b_rec[k] == doctest::Approx(erec).epsilon(1e-15));
        for (std::size_t o = 0; o < 4; ++o) {
            const auto& d0 = before.layers[1].W;
            const double ecol = partner == r ? d0(o, r) : d0(o, r) + d0(o, partner);
            CHECK(net.layers[1].W(o, k) == doctest::Approx(ecol).epsilon(1e-15));
        }
    }
    CHECK(net.layers[0].b_rec == before.layers[0].b_rec);
}

TEST_CASE("merge is permutation-equivariant") {
    Rng rng(9);
    const Matrix probe = random_inputs(20, 5, rng);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> widths{8, 5};
        Network a = Network::create(5, widths, 3, rng);
        randomize(a, rng);
        std::vector<std::size_t> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Network b = a;
        permute_first_layer(b, perm);
        merge(a, 3);
        merge(b, 3);
        CHECK(sup_diff(predict_batch(a, probe), predict_batch(b, probe)) <= 1e-12);
        auto sorted_rows = [](const Matrix& w) {
            std::vector<std::vector<double>> rows;
            for (std::size_t r = 0; r < w.rows(); ++r) rows.emplace_back(w.row(r).begin(), w.row(r).end());
            std::sort(rows.begin(), rows.end());
            return rows;
        };
        const auto ra = sorted_rows(a.layers[0].W);
        const auto rb = sorted_rows(b.layers[0].W);
        for (std::size_t r = 0; r < ra.size(); ++r)
            for (std::size_t c = 0; c < ra[r].size(); ++c) CHECK(ra[r][c] == doctest::Approx(rb[r][c]).epsilon(1e-14));
    }
}

TEST_CASE("width accounting over random action sequences") {
    Rng rng(10);
    std::vector<BatchPtr> pool{random_batch(20, 4, 2, rng)};
    for (int seq = 0; seq < 100; ++seq) {
        const std::size_t initial = 2 + rng() % 8;
        std::vector<std::size_t> widths(1 + rng() % 3, initial);
        Network net = Network::create(4, widths, 2, rng);
        long long expected = static_cast<long long>(initial);
        for (int step = 0; step < 10; ++step) {
            const auto w = net.layers[0].hidden();
            switch (rng() % 3) {
                case 0: CHECK(pool_finetune(net, pool, 0.2)); break;
                case 1: {
                    const std::size_t d = rng() % 4;
                    increment(net, d, pool, rng);
                    expected += static_cast<long long>(d);
                    break;
                }
                default: {
                    const std::size_t d = rng() % (w / 2 + 1);
                    merge(net, d);
                    expected -= static_cast<long long>(d);
                }
            }
            REQUIRE(net.well_formed());
            CHECK(static_cast<long long>(net.layers[0].hidden()) == expected);
            const double nu = static_cast<double>(net.layers[0].hidden()) / static_cast<double>(initial);
            CHECK(nu == static_cast<double>(expected) / static_cast<double>(initial));
        }
    }
}

TEST_CASE("pool_finetune: empty pool, singleton pool and toy convergence") {
    Rng rng(11);
    std::vector<std::size_t> widths{6};
    Network net = Network::create(4, widths, 2, rng);
    const Network before = net;
    CHECK_FALSE(pool_finetune(net, std::vector<BatchPtr>{}, 0.2));
    CHECK(net == before);

    const auto batch = random_batch(30, 4, 2, rng);
    Network a = net, b = net;
    CHECK(pool_finetune(a, std::vector<BatchPtr>{batch}, 0.2));
    finetune(b, *batch, 0.2);
    CHECK(a == b);

    // linearly separable toy task: class 1 when the first coordinate is high
    std::vector<BatchPtr> pool;
    for (std::size_t s = 0; s < 3; ++s) {
        Matrix x = random_inputs(40, 4, rng);
        std::vector<std::size_t> labels(40);
        for (std::size_t i = 0; i < 40; ++i) {
            labels[i] = i % 2;
            x(i, 0) = labels[i] ? 0.9 : 0.1;
        }
        pool.push_back(std::make_shared<const DataBatch>(DataBatch::from_labels(s + 1, x, labels, 2)));
    }
    auto mean_lc = [&](const Network& n) {
        double t = 0.0;
        for (const auto& p : pool) t += batch_errors(n, *p).classification;
        return t / static_cast<double>(pool.size());
    };
    for (int i = 0; i < 100; ++i) CHECK(pool_finetune(net, pool, 0.2));
    const double converged = mean_lc(net);
    CHECK(pool_finetune(net, pool, 0.2));
    CHECK(mean_lc(net) <= converged);
}
