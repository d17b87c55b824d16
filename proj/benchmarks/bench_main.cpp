#include <benchmark/benchmark.h>

#include "cfo/dataset.hpp"
#include "cfo/estimators.hpp"
#include "cfo/nn/layers.hpp"
#include "cfo/nn/model.hpp"
#include "cfo/rng.hpp"
#include "cfo/waveform.hpp"

namespace {

using namespace cfo;

nn::Tensor<float> noise(const nn::Shape& shape, std::uint64_t seed) {
    Rng rng(seed);
    nn::Tensor<float> t(shape);
    for (auto& v : t.values()) v = static_cast<float>(rng.normal());
    return t;
}

void BM_Synthesize(benchmark::State& state) {
    SynthesisParams p;
    p.modulation = static_cast<Modulation>(state.range(0));
    p.length = 1024;
    p.cfo_norm = 0.05;
    p.snr_db = 10;
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(p, rng));
}
BENCHMARK(BM_Synthesize)->DenseRange(0, 3);

void BM_Estimator(benchmark::State& state) {
    Rng rng(2);
    SynthesisParams p;
    p.length = static_cast<std::size_t>(state.range(1));
    p.cfo_norm = 0.05;
    p.snr_db = 10;
    const auto frame = synthesize(p, rng).frame;
    const auto spec = est::parse_estimator(state.range(0) == 0 ? "kay" : state.range(0) == 1 ? "kay2" : "ml");
    for (auto _ : state) benchmark::DoNotOptimize(est::estimate(frame, spec));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Estimator)->ArgsProduct({{0, 1, 2}, {512, 1024, 2048}});

void BM_ConvForward(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto x = noise({64, c, 512}, 3);
    const auto w = noise({c, c, 3}, 4);
    const nn::Tensor<float> b({c});
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv1d_forward(x, w, b, 1, 1));
}
BENCHMARK(BM_ConvForward)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
    nn::ModelConfig cfg;
    cfg.input_length = static_cast<std::size_t>(state.range(0));
    cfg.head = nn::Head::GlobalAvgPool;
    auto model = nn::make_model<float>(cfg, 5);
    const auto x = noise({64, 2, cfg.input_length}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(nn::model_forward(model, x, nn::Mode::Eval));
}
BENCHMARK(BM_ModelForward)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_GenerateDataset(benchmark::State& state) {
    data::DatasetSpec spec;
    spec.modulations = {Modulation::Bpsk, Modulation::Fsk2, Modulation::Qam16, Modulation::Pam4};
    spec.snr_grid_db = {0, 10, 20};
    spec.frames_per_cell = 16;
    for (auto _ : state) benchmark::DoNotOptimize(data::generate(spec, 1));
}
BENCHMARK(BM_GenerateDataset)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
