#include <benchmark/benchmark.h>

#include <vector>

#include "deepclust/encoder.hpp"
#include "deepclust/gmm.hpp"
#include "deepclust/losses.hpp"
#include "deepclust/metrics.hpp"

namespace dc = deepclust;

namespace {

dc::Matrix random_matrix(std::size_t r, std::size_t c, dc::Rng& rng) {
    dc::Matrix m(r, c);
    for (double& x : m.data()) x = rng.normal();
    return m;
}

// One SDC step's worth of work: forward 3M samples, COM-Triplet loss, backward.
void BM_EncoderForwardBackward(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    dc::Rng rng(1);
    dc::EncoderConfig cfg;
    cfg.input_dim = 8;
    const dc::EncoderParams params = dc::EncoderParams::init(cfg, rng);
    const dc::Matrix x = random_matrix(8, 3 * m, rng);
    for (auto _ : state) {
        dc::Tape tape;
        const auto g = dc::forward(tape, params, x, true, &rng);
        auto loss = dc::com_triplet_loss(dc::cols(g.output, 0, m), dc::cols(g.output, m, m),
                                         dc::cols(g.output, 2 * m, m), dc::MarginSpec::adaptive());
        tape.backward(loss);
        benchmark::DoNotOptimize(dc::gradients(tape, g));
    }
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(15)->Arg(60);

// GMM fit on a UDC-sized batch (3M = 45 embeddings of dimension 32).
void BM_FitEm(benchmark::State& state) {
    dc::Rng rng(2);
    dc::Matrix x = random_matrix(32, 45, rng);
    for (std::size_t j = 30; j < 45; ++j) {
        for (std::size_t s = 0; s < 32; ++s) x(s, j) += 3.0;
    }
    dc::EmConfig cfg;
    cfg.covariance = state.range(0) ? dc::CovarianceType::full : dc::CovarianceType::diagonal;
    for (auto _ : state) benchmark::DoNotOptimize(dc::fit_em(x, cfg));
}
BENCHMARK(BM_FitEm)->Arg(0)->Arg(1);

void BM_RocAuc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    dc::Rng rng(3);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.bernoulli(0.1) ? 1 : 0;
        s[i] = rng.normal() + y[i];
    }
    y[0] = 1;
    y[1] = 0;
    for (auto _ : state) benchmark::DoNotOptimize(dc::roc_auc(y, s));
    state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(10)->Range(100, 100000)->Complexity(benchmark::oNLogN);

}  // namespace

BENCHMARK_MAIN();
