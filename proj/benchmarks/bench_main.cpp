#include <benchmark/benchmark.h>

#include "lednet/classifier.hpp"
#include "lednet/localizer.hpp"
#include "lednet/mask_ops.hpp"
#include "lednet/metrics.hpp"
#include "lednet/random.hpp"
#include "lednet/synthetic.hpp"
#include "lednet/tensor.hpp"

namespace {

lednet::BinaryMask noisy_mask(int size, std::uint64_t seed, double density)
{
    lednet::Rng rng(seed);
    lednet::BinaryMask m(size, size);
    for (auto& v : m.values) v = lednet::uniform01(rng) < density ? 1 : 0;
    return m;
}

void BM_Iou(benchmark::State& state)
{
    const int size = static_cast<int>(state.range(0));
    const auto a = noisy_mask(size, 1, 0.4), b = noisy_mask(size, 2, 0.4);
    for (auto _ : state) benchmark::DoNotOptimize(lednet::metrics::iou(a, b));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Iou)->Arg(64)->Arg(256);

void BM_ConnectedComponents(benchmark::State& state)
{
    const auto m = noisy_mask(static_cast<int>(state.range(0)), 3, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(lednet::mask::connected_components(m));
}
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Arg(256);

void BM_PostProcess(benchmark::State& state)
{
    const auto mask = lednet::synth::generate_synthetic_pair(4, 256, 256, {true}).second;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lednet::mask::mirror_fill(lednet::mask::retain_two_regions(mask)));
    }
}
BENCHMARK(BM_PostProcess);

void BM_LocalizerForward(benchmark::State& state)
{
    lednet::configure_determinism();
    lednet::seg::SegModelConfig c;
    c.height = c.width = static_cast<int>(state.range(0));
    c.depth = 3;
    auto model = lednet::seg::build_seg_model(c, 0);
    model->eval();
    torch::NoGradGuard no_grad;
    const auto x = torch::rand({1, 1, c.height, c.width});
    for (auto _ : state) benchmark::DoNotOptimize(model->forward(x));
}
BENCHMARK(BM_LocalizerForward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ClassifierForward(benchmark::State& state)
{
    lednet::configure_determinism();
    auto c = lednet::cls::ClsModelConfig::dense_tiny();
    auto model = lednet::cls::build_classifier(c, 0);
    model->eval();
    torch::NoGradGuard no_grad;
    const auto x = torch::rand({state.range(0), 3, c.height, c.width});
    for (auto _ : state) benchmark::DoNotOptimize(model->forward(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassifierForward)->Arg(1)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
