// Serial against OpenMP kernels, plus one fine-tuning pass at desk scale.

#include <benchmark/benchmark.h>

#include <random>

#include "radae/kernels.hpp"
#include "radae/nn.hpp"

namespace {

using radae::Matrix;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.flat()) v = u(rng);
    return m;
}

template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&)>
void bm_gemm_nt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, n, 1);
    const Matrix b = random_matrix(n, n, 2);
    Matrix c(n, n);
    for (auto _ : state) {
        Gemm(a, b, c);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&)>
void bm_gemm_tn_acc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, n, 3);
    const Matrix b = random_matrix(n, n, 4);
    Matrix c(n, n);
    for (auto _ : state) {
        Gemm(a, b, c);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <void (*Act)(Matrix&, std::span<const double>)>
void bm_bias_sigmoid(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix src = random_matrix(n, n, 5);
    const Matrix bias = random_matrix(1, n, 6);
    for (auto _ : state) {
        Matrix m = src;
        Act(m, bias.row(0));
        benchmark::DoNotOptimize(m.data());
    }
}

void bm_finetune(benchmark::State& state) {
    const auto width = static_cast<std::size_t>(state.range(0));
    radae::Rng rng(7);
    const std::vector<std::size_t> widths{width, width, width};
    radae::Network net = radae::Network::create(784, widths, 10, rng);
    const Matrix x = random_matrix(1000, 784, 8);
    Matrix inputs(1000, 784);
    for (std::size_t i = 0; i < x.flat().size(); ++i) inputs.flat()[i] = 0.5 + 0.5 * x.flat()[i];
    std::vector<std::size_t> labels(1000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 10;
    const auto batch = radae::DataBatch::from_labels(1, inputs, labels, 10);
    for (auto _ : state) {
        radae::finetune(net, batch, 0.2);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}

}  // namespace

BENCHMARK(bm_gemm_nt<radae::kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm_nt<radae::kernels::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm_tn_acc<radae::kernels::serial::gemm_tn_acc>)->Name("gemm_tn_acc/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_gemm_tn_acc<radae::kernels::parallel::gemm_tn_acc>)->Name("gemm_tn_acc/parallel")->Arg(64)->Arg(256);
BENCHMARK(bm_bias_sigmoid<radae::kernels::serial::bias_sigmoid>)->Name("bias_sigmoid/serial")->Arg(256);
BENCHMARK(bm_bias_sigmoid<radae::kernels::parallel::bias_sigmoid>)->Name("bias_sigmoid/parallel")->Arg(256);
BENCHMARK(bm_finetune)->Name("finetune/784-w-w-w-10")->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
