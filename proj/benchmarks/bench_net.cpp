#include <benchmark/benchmark.h>

#include "pff/net.hpp"
#include "pff/parallel.hpp"
#include "pff/rng.hpp"

using namespace pff;

namespace {

NetConfig desk_config() {
    NetConfig cfg;
    cfg.in_channels = 1;
    cfg.k = 7;
    cfg.deep_layers = 10;
    cfg.deep_channels = 32;
    cfg.pool_after = {2, 4};
    cfg.upsample_after = {6, 8};
    cfg.shallow_layers = 3;
    cfg.shallow_channels = 16;
    cfg.init_seed = 1;
    return cfg;
}

Tensor make_input(int n, int c, int size, uint64_t seed) {
    Rng rng(seed);
    Tensor t(n, c, size, size);
    for (auto& v : t.v) v = static_cast<float>(rng.uniform());
    return t;
}

}  // namespace

static void BM_ForwardEval(benchmark::State& state) {
    set_num_threads(static_cast<int>(state.range(1)));
    Network net(desk_config());
    Tensor x = make_input(1, 1, static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        Tensor y = net.forward(x, false);
        benchmark::DoNotOptimize(y.v.data());
    }
    set_num_threads(1);
}
BENCHMARK(BM_ForwardEval)->Args({32, 1})->Args({64, 1})->Args({64, 2});

static void BM_ForwardBackward(benchmark::State& state) {
    set_num_threads(static_cast<int>(state.range(1)));
    NetConfig cfg = desk_config();
    Network net(cfg);
    Tensor x = make_input(4, 1, static_cast<int>(state.range(0)), 3);
    Rng rng(4);
    for (auto _ : state) {
        net.zero_grad();
        Tensor y = net.forward(x, true);
        Tensor up(y.n, y.c, y.h, y.w, 1e-3f);
        Tensor dx = net.backward(up);
        benchmark::DoNotOptimize(dx.v.data());
    }
    set_num_threads(1);
}
BENCHMARK(BM_ForwardBackward)->Args({32, 1})->Args({32, 2});

BENCHMARK_MAIN();
