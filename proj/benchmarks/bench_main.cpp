#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "wmt/analysis/stats.hpp"
#include "wmt/incremental_decoder.hpp"
#include "wmt/metrics.hpp"
#include "wmt/model.hpp"
#include "wmt/ops.hpp"
#include "wmt/rng.hpp"
#include "wmt/tensor.hpp"
#include "wmt/train.hpp"
#include "wmt/wm_decode.hpp"

namespace {

using namespace wmt;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool grad = false) {
    std::vector<double> v(rows * cols);
    for (double& x : v) {
        x = 2.0 * uniform_unit(rng) - 1.0;
    }
    return Tensor({rows, cols}, std::move(v), grad);
}

ModelConfig bench_config(std::size_t d_model) {
    ModelConfig c;
    c.d_model = d_model;
    c.n_layers = 2;
    c.n_heads = 4;
    c.d_ff = 2 * d_model;
    c.src_vocab_size = 64;
    c.tgt_vocab_size = 64;
    c.mem_size = 10;
    c.max_len = 64;
    c.seed = 1;
    return c;
}

std::vector<TokenId> sequence(std::size_t len) {
    std::vector<TokenId> ids = {kStartId};
    for (std::size_t i = 1; i + 1 < len; ++i) {
        ids.push_back(static_cast<TokenId>(kReservedCount + i % 60));
    }
    ids.push_back(kEndId);
    return ids;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Tensor a = random_matrix(n, n, rng);
    const Tensor b = random_matrix(n, n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

// Full cached decode of a 24-token sequence, one step at a time.
void BM_CachedDecoderSteps(benchmark::State& state) {
    const ModelConfig c = bench_config(static_cast<std::size_t>(state.range(0)));
    Rng rng(2);
    const ModelParams p = init_params(c, rng);
    const EncoderOutput enc = encoder_forward(sequence(16), c, p);
    const std::vector<TokenId> ids = sequence(24);
    for (auto _ : state) {
        CachedDecoder decoder(c, p, enc);
        std::vector<std::uint8_t> allowed;
        for (TokenId id : ids) {
            allowed.push_back(1);
            benchmark::DoNotOptimize(decoder.step(id, kTargetFlag, allowed));
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ids.size()));
}
BENCHMARK(BM_CachedDecoderSteps)->Arg(32)->Arg(64);

// Routing, full causal pass, masked loss and reverse pass for one pair.
void BM_TrainingStep(benchmark::State& state) {
    const ModelConfig c = bench_config(static_cast<std::size_t>(state.range(0)));
    Rng rng(3);
    const ModelParams p = init_params(c, rng);
    const std::vector<TokenId> src = sequence(16);
    const std::vector<TokenId> y_real = sequence(14);
    for (auto _ : state) {
        Tape tape;
        TapeScope scope(tape);
        const EncoderOutput enc = encoder_forward(src, c, p);
        const TrainingForward fwd = training_forward_pass(enc, y_real, c, p, rng);
        const Tensor loss = masked_cross_entropy(fwd.logits, fwd.routed, y_real);
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_TrainingStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_NucleusSample(benchmark::State& state) {
    Rng rng(4);
    std::vector<double> logits(static_cast<std::size_t>(state.range(0)));
    for (double& x : logits) {
        x = 4.0 * uniform_unit(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(nucleus_sample(logits, 0.9, rng));
    }
}
BENCHMARK(BM_NucleusSample)->Arg(64)->Arg(4096);

void BM_CorpusBleu(benchmark::State& state) {
    std::vector<std::string> hyps, refs;
    for (int i = 0; i < state.range(0); ++i) {
        hyps.push_back("the cat sat on the mat near door " + std::to_string(i % 17));
        refs.push_back("the cat sat on a mat by the door " + std::to_string(i % 13));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(bleu4(hyps, refs));
    }
}
BENCHMARK(BM_CorpusBleu)->Arg(1000);

void BM_RankSumExact(benchmark::State& state) {
    const std::vector<double> a = {1, 4, 6, 9, 12, 15};
    const std::vector<double> b = {2, 3, 5, 7, 8, 10};
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            analysis::wilcoxon_rank_sum(a, b, analysis::RankSumMethod::exact).p_value);
    }
}
BENCHMARK(BM_RankSumExact);

}  // namespace

BENCHMARK_MAIN();
