#include <benchmark/benchmark.h>

#include "pff/filter_flow.hpp"
#include "pff/parallel.hpp"
#include "pff/rng.hpp"

using namespace pff;

namespace {

FilterFlow make_flow(int h, int w, int k, uint64_t seed) {
    Rng rng(seed);
    FilterFlow raw(h, w, k, FlowConstraint::free);
    for (auto& v : raw.coeffs) v = static_cast<float>(rng.uniform(-2, 2));
    return normalize_simplex(raw);
}

Image make_image(int c, int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image img(c, h, w);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

}  // namespace

static void BM_ApplyFlow(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    set_num_threads(1);
    const FilterFlow flow = make_flow(size, size, k, 1);
    const Image img = make_image(3, size, size, 2);
    for (auto _ : state) {
        Image out = apply_flow(flow, img);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(size) * size * k * k * 3);
}
BENCHMARK(BM_ApplyFlow)->Args({64, 7})->Args({128, 7})->Args({128, 17})->Args({256, 7});

static void BM_ApplyFlowThreaded(benchmark::State& state) {
    const int threads = static_cast<int>(state.range(0));
    set_num_threads(threads);
    const FilterFlow flow = make_flow(192, 192, 9, 3);
    const Image img = make_image(3, 192, 192, 4);
    for (auto _ : state) {
        Image out = apply_flow(flow, img);
        benchmark::DoNotOptimize(out.data.data());
    }
    set_num_threads(1);
}
BENCHMARK(BM_ApplyFlowThreaded)->Arg(1)->Arg(2)->Arg(4);

static void BM_ApplyFlowBruteforce(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const FilterFlow flow = make_flow(size, size, 5, 5);
    const Image img = make_image(1, size, size, 6);
    for (auto _ : state) {
        Image out = apply_flow_bruteforce(flow, img);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_ApplyFlowBruteforce)->Arg(16)->Arg(32);

static void BM_NormalizeSimplex(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Rng rng(7);
    FilterFlow raw(size, size, 7, FlowConstraint::free);
    for (auto& v : raw.coeffs) v = static_cast<float>(rng.uniform(-2, 2));
    for (auto _ : state) {
        FilterFlow out = normalize_simplex(raw);
        benchmark::DoNotOptimize(out.coeffs.data());
    }
}
BENCHMARK(BM_NormalizeSimplex)->Arg(64)->Arg(128);
