#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "wmt/error.hpp"
#include "wmt/model.hpp"
#include "wmt/ops.hpp"
#include "wmt/wm_decode.hpp"

using namespace wmt;

namespace {

constexpr std::size_t kVocab = 8;

// Returns logits from a callback and records the attention rows it was fed.
class StubDecoder final : public StepDecoder {
public:
    using Script = std::function<std::vector<double>(std::size_t position)>;

    explicit StubDecoder(Script script) : script_(std::move(script)) {}

    std::size_t output_width() const override { return kVocab + 2; }

    std::vector<double> step(TokenId token, std::uint8_t flag,
                             std::span<const std::uint8_t> allowed) override {
        fed_tokens.push_back(token);
        fed_flags.push_back(flag);
        rows.emplace_back(allowed.begin(), allowed.end());
        return script_(position_++);
    }

    std::size_t position() const override { return position_; }

    std::vector<TokenId> fed_tokens;
    std::vector<std::uint8_t> fed_flags;
    std::vector<std::vector<std::uint8_t>> rows;

private:
    Script script_;
    std::size_t position_ = 0;
};

// Logit row preferring `flag`, with token logits peaked at `token`.
std::vector<double> row_for(std::uint8_t flag, TokenId token) {
    std::vector<double> row(kVocab + 2, 0.0);
    row[static_cast<std::size_t>(token)] = 20.0;
    row[kVocab + flag] = 5.0;
    return row;
}

std::vector<double> random_row(Rng& rng) {
    std::vector<double> row(kVocab + 2);
    for (double& x : row) {
        x = 4.0 * uniform_unit(rng) - 2.0;
    }
    return row;
}

std::vector<double> log_probs(std::initializer_list<double> p) {
    std::vector<double> out;
    for (double x : p) {
        out.push_back(std::log(x));
    }
    return out;
}

std::vector<std::uint8_t> mask_rows(const AttentionMask& m) {
    return m.allowed;
}

}  // namespace

TEST(LookAheadMask, LowerTriangular) {
    EXPECT_EQ(mask_rows(make_look_ahead_mask(1)), (std::vector<std::uint8_t>{1}));
    EXPECT_EQ(mask_rows(make_look_ahead_mask(3)),
              (std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0, 1, 1, 1}));
    EXPECT_THROW(make_look_ahead_mask(0), ContractError);
}

TEST(LookAheadMask, UniformAttentionRenormalizesCausally) {
    const Tensor weights = softmax(add(Tensor({3, 3}), make_look_ahead_mask(3).bias()), 1);
    const double expected[] = {1, 0, 0, 0.5, 0.5, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_NEAR(weights.values()[i], expected[i], 1e-12);
    }
}

TEST(MemoryAblationMask, AllTargetsEqualsLookAhead) {
    const std::vector<std::uint8_t> flags(5, 1);
    EXPECT_EQ(mask_rows(make_memory_ablation_mask(flags)), mask_rows(make_look_ahead_mask(5)));
}

TEST(MemoryAblationMask, HidesMemoryPositions) {
    const std::vector<std::uint8_t> flags = {1, 0, 1};
    const AttentionMask m = make_memory_ablation_mask(flags);
    // Row 2 sees the start token and itself, never the memory slot.
    EXPECT_TRUE(m.at(2, 0));
    EXPECT_FALSE(m.at(2, 1));
    EXPECT_TRUE(m.at(2, 2));
    // The memory position itself is still computed from the non-memory past.
    EXPECT_TRUE(m.at(1, 0));
    EXPECT_FALSE(m.at(1, 1));
    EXPECT_FALSE(m.at(0, 1));
}

TEST(Nucleus, SupportFromCumulativeMass) {
    const auto logits = log_probs({0.5, 0.3, 0.2});
    EXPECT_EQ(nucleus_support(logits, 0.9), (std::vector<TokenId>{0, 1, 2}));
    EXPECT_EQ(nucleus_support(logits, 0.8), (std::vector<TokenId>{0, 1}));
    EXPECT_EQ(nucleus_support(logits, 0.5), (std::vector<TokenId>{0}));
    EXPECT_EQ(nucleus_support(logits, 1.0), (std::vector<TokenId>{0, 1, 2}));
    // Ties: lower id first.
    EXPECT_EQ(nucleus_support(std::vector<double>{0.0, 0.0, 0.0}, 0.5),
              (std::vector<TokenId>{0, 1}));
    const auto reordered = log_probs({0.2, 0.5, 0.3});
    EXPECT_EQ(nucleus_support(reordered, 0.7), (std::vector<TokenId>{1, 2}));
}

TEST(Nucleus, DistributionRenormalizesTruncatedSupport) {
    const auto d = nucleus_distribution(log_probs({0.5, 0.3, 0.2}), 0.7);
    ASSERT_EQ(d.size(), 3u);
    EXPECT_NEAR(d[0], 0.625, 1e-12);
    EXPECT_NEAR(d[1], 0.375, 1e-12);
    EXPECT_EQ(d[2], 0.0);
}

TEST(Nucleus, OneHotAlwaysDrawsItsToken) {
    std::vector<double> logits(6, -1e9);
    logits[4] = 0.0;
    Rng rng(1);
    for (double p : {0.1, 0.5, 0.9, 1.0}) {
        for (int i = 0; i < 50; ++i) {
            EXPECT_EQ(nucleus_sample(logits, p, rng), 4);
        }
    }
}

TEST(Nucleus, RejectsInvalidP) {
    Rng rng(1);
    const std::vector<double> logits = {0.0, 1.0};
    EXPECT_THROW(nucleus_sample(logits, 0.0, rng), ContractError);
    EXPECT_THROW(nucleus_sample(logits, 1.5, rng), ContractError);
}

TEST(Nucleus, MonteCarloMatchesExactWithinThreeSigma) {
    const std::size_t draws = 100000;
    for (double p : {0.9, 0.7}) {
        const auto logits = log_probs({0.5, 0.3, 0.2});
        const auto exact = nucleus_distribution(logits, p);
        std::vector<std::size_t> counts(3, 0);
        Rng rng(123);
        for (std::size_t i = 0; i < draws; ++i) {
            ++counts[static_cast<std::size_t>(nucleus_sample(logits, p, rng))];
        }
        for (std::size_t k = 0; k < 3; ++k) {
            const double freq = static_cast<double>(counts[k]) / draws;
            const double sigma = std::sqrt(exact[k] * (1 - exact[k]) / draws);
            EXPECT_LE(std::abs(freq - exact[k]), 3 * sigma + 1e-12) << "p " << p << " k " << k;
        }
    }
}

TEST(SelectFlagAndToken, TargetFlagTakesArgmaxWithoutRng) {
    std::vector<double> row(kVocab + 2, 0.0);
    row[7] = 3.0;
    row[kVocab] = -1.0;
    row[kVocab + 1] = 2.0;
    Rng rng(5);
    const Rng before = rng;
    const DecodeStep s = select_flag_and_token(row, rng, 0.9);
    EXPECT_EQ(s.token, 7);
    EXPECT_EQ(s.flag, kTargetFlag);
    EXPECT_FALSE(s.forced);
    EXPECT_EQ(s.token_logits.size(), kVocab);
    EXPECT_EQ(s.flag0_logit, -1.0);
    EXPECT_EQ(s.flag1_logit, 2.0);
    EXPECT_TRUE(rng == before);
}

TEST(SelectFlagAndToken, MemoryFlagWinsTiesAndSamples) {
    Rng rng(5);
    const Rng before = rng;
    const DecodeStep s = select_flag_and_token(row_for(kMemoryFlag, 3), rng, 0.9);
    EXPECT_EQ(s.flag, kMemoryFlag);
    EXPECT_EQ(s.token, 3);
    EXPECT_FALSE(rng == before);

    std::vector<double> tie(kVocab + 2, 0.0);
    EXPECT_EQ(select_flag_and_token(tie, rng, 0.9).flag, kMemoryFlag);
}

TEST(SelectFlagAndToken, MemoryBranchFrequenciesMatchNucleus) {
    std::vector<double> row = {0.4, 1.2, -0.3, 0.9, 0.0, -2.0, 0.5, 0.1, 3.0, 0.0};
    const std::vector<double> token_logits(row.begin(), row.begin() + kVocab);
    const auto exact = nucleus_distribution(token_logits, 0.9);
    const std::size_t draws = 100000;
    std::vector<std::size_t> counts(kVocab, 0);
    Rng rng(77);
    for (std::size_t i = 0; i < draws; ++i) {
        const DecodeStep s = select_flag_and_token(row, rng, 0.9);
        ASSERT_EQ(s.flag, kMemoryFlag);
        ++counts[static_cast<std::size_t>(s.token)];
    }
    for (std::size_t k = 0; k < kVocab; ++k) {
        const double freq = static_cast<double>(counts[k]) / draws;
        const double sigma = std::sqrt(exact[k] * (1 - exact[k]) / draws);
        EXPECT_LE(std::abs(freq - exact[k]), 3 * sigma + 1e-12) << "token " << k;
    }
}

TEST(SplitMerge, WorkedExampleFlags) {
    // Targets t1..t4 and memory m1..m3 under flags [1,1,0,1,0,0,1].
    const std::vector<TokenId> targets = {1, 10, 11, 2};
    const std::vector<TokenId> memory = {20, 21, 22};
    const std::vector<std::uint8_t> flags = {1, 1, 0, 1, 0, 0, 1};
    const RoutedSequence seq = merge_routed(targets, memory, flags);
    EXPECT_EQ(seq.tokens, (std::vector<TokenId>{1, 10, 20, 11, 21, 22, 2}));
    EXPECT_EQ(seq.memory_count, 3u);
    const auto [t, m] = split_routed(seq);
    EXPECT_EQ(t, targets);
    EXPECT_EQ(m, memory);
    EXPECT_NO_THROW(seq.check_invariants(3));
    EXPECT_THROW(seq.check_invariants(2), ContractError);
}

TEST(SplitMerge, AllTargetsAndBadCounts) {
    const std::vector<TokenId> ids = {1, 5, 2};
    const RoutedSequence seq = merge_routed(ids, {}, std::vector<std::uint8_t>{1, 1, 1});
    const auto [t, m] = split_routed(seq);
    EXPECT_EQ(t, ids);
    EXPECT_TRUE(m.empty());
    EXPECT_THROW(merge_routed(ids, {}, std::vector<std::uint8_t>{1, 0, 1}), ContractError);
}

TEST(RoutedSequence, InvariantViolations) {
    RoutedSequence bad_start{{1, 2}, {0, 1}, 1};
    EXPECT_THROW(bad_start.check_invariants(5), ContractError);
    RoutedSequence bad_len{{1, 2}, {1}, 0};
    EXPECT_THROW(bad_len.check_invariants(5), ContractError);
    RoutedSequence bad_count{{1, 2}, {1, 0}, 0};
    EXPECT_THROW(bad_count.check_invariants(5), ContractError);
}

TEST(RouteTeacherForced, ScriptedFlagsReproduceWorkedExample) {
    const std::vector<TokenId> y_real = {kStartId, 10, 11, kEndId};
    const std::vector<std::uint8_t> decisions = {1, 0, 1, 0, 0, 1};
    const std::vector<TokenId> memory_tokens = {0, 5, 0, 6, 7, 0};
    StubDecoder stub([&](std::size_t pos) {
        // Token logits peak somewhere else for target steps: teacher forcing
        // must ignore them.
        return row_for(decisions[pos], decisions[pos] == 0 ? memory_tokens[pos] : 4);
    });
    Rng rng(1);
    const RoutingResult r = route_teacher_forced(stub, y_real, 3, 0.9, rng, 64);
    EXPECT_EQ(r.routed.flags, (std::vector<std::uint8_t>{1, 1, 0, 1, 0, 0, 1}));
    EXPECT_EQ(r.routed.tokens, (std::vector<TokenId>{kStartId, 10, 5, 11, 6, 7, kEndId}));
    EXPECT_EQ(r.steps.size(), 6u);
    for (const DecodeStep& s : r.steps) {
        EXPECT_FALSE(s.forced);
    }
    // The stub was fed exactly the routed prefix.
    EXPECT_EQ(stub.fed_tokens,
              std::vector<TokenId>(r.routed.tokens.begin(), r.routed.tokens.end() - 1));
}

TEST(RouteTeacherForced, CapacityAndExhaustionOverrides) {
    const std::vector<TokenId> y_real = {kStartId, 10, kEndId};
    Rng rng(1);
    // Always asks for memory: the capacity override forces targets once full.
    StubDecoder greedy_memory([](std::size_t) { return row_for(kMemoryFlag, 6); });
    const RoutingResult a = route_teacher_forced(greedy_memory, y_real, 2, 0.9, rng, 64);
    EXPECT_EQ(a.routed.flags, (std::vector<std::uint8_t>{1, 0, 0, 1, 1}));
    EXPECT_FALSE(a.steps[1].forced);
    EXPECT_TRUE(a.steps[2].forced);
    // Never asks for memory: once targets run out the rest is forced memory.
    StubDecoder never_memory([](std::size_t) { return row_for(kTargetFlag, 6); });
    const RoutingResult b = route_teacher_forced(never_memory, y_real, 2, 0.9, rng, 64);
    EXPECT_EQ(b.routed.flags, (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
    EXPECT_EQ(b.routed.tokens, (std::vector<TokenId>{kStartId, 10, kEndId, 6, 6}));
    EXPECT_TRUE(b.steps[2].forced);
    EXPECT_TRUE(b.steps[3].forced);
}

TEST(RouteTeacherForced, ZeroMemoryIsPlainTeacherForcing) {
    const std::vector<TokenId> y_real = {kStartId, 4, 5, 6, kEndId};
    Rng rng(3);
    StubDecoder stub([&](std::size_t) { return random_row(rng); });
    const RoutingResult r = route_teacher_forced(stub, y_real, 0, 0.9, rng, 64);
    EXPECT_EQ(r.routed.tokens, y_real);
    EXPECT_EQ(r.routed.flags, std::vector<std::uint8_t>(y_real.size(), 1));
}

TEST(RouteTeacherForced, InputErrors) {
    Rng rng(1);
    StubDecoder stub([](std::size_t) { return row_for(kTargetFlag, 4); });
    EXPECT_THROW(route_teacher_forced(stub, std::vector<TokenId>{kStartId, 4}, 1, 0.9, rng, 64),
                 InputError);
    EXPECT_THROW(
        route_teacher_forced(stub, std::vector<TokenId>{kStartId, 4, kEndId}, 10, 0.9, rng, 12),
        InputError);
}

// Property run over random stub models: exact length, exact memory count,
// teacher-forcing fidelity and nucleus membership of every memory token.
TEST(RouteTeacherForced, RandomStubProperties) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const std::size_t len = 2 + static_cast<std::size_t>(uniform_unit(rng) * 8);
        const std::size_t mem = static_cast<std::size_t>(uniform_unit(rng) * 11);
        std::vector<TokenId> y_real = {kStartId};
        for (std::size_t i = 0; i + 2 < len; ++i) {
            y_real.push_back(static_cast<TokenId>(4 + (seed + i) % 4));
        }
        y_real.push_back(kEndId);
        Rng model_rng(seed ^ 0x9e3779b97f4a7c15ULL);
        StubDecoder stub([&](std::size_t) { return random_row(model_rng); });
        const RoutingResult r = route_teacher_forced(stub, y_real, mem, 0.9, rng, 64);
        ASSERT_EQ(r.routed.tokens.size(), y_real.size() + mem) << "seed " << seed;
        ASSERT_EQ(r.steps.size(), y_real.size() + mem - 1);
        ASSERT_EQ(r.routed.memory_count, mem);
        ASSERT_NO_THROW(r.routed.check_invariants(mem));
        const auto [targets, memory] = split_routed(r.routed);
        ASSERT_EQ(targets, y_real) << "seed " << seed;
        for (const DecodeStep& s : r.steps) {
            if (s.flag == kMemoryFlag) {
                const auto support = nucleus_support(s.token_logits, 0.9);
                ASSERT_NE(std::find(support.begin(), support.end(), s.token), support.end());
            }
        }
    }
}

TEST(TrainingForwardPass, LogitsMatchRoutingRowsAndMaskSuccessors) {
    ModelConfig c;
    c.d_model = 8;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_ff = 16;
    c.src_vocab_size = 10;
    c.tgt_vocab_size = kVocab;
    c.mem_size = 3;
    c.max_len = 16;
    Rng init(8);
    const ModelParams p = init_params(c, init);
    const EncoderOutput enc = encoder_forward(std::vector<TokenId>{4, 5, 6}, c, p);
    const std::vector<TokenId> y_real = {kStartId, 4, 7, kEndId};
    Rng rng(2);
    const TrainingForward f = training_forward_pass(enc, y_real, c, p, rng);
    ASSERT_EQ(f.routed.tokens.size(), 7u);
    ASSERT_EQ(f.logits.shape(), (Shape{6, kVocab + 2}));
    ASSERT_EQ(f.steps.size(), 6u);
    for (std::size_t t = 0; t < 6; ++t) {
        for (std::size_t k = 0; k < kVocab; ++k) {
            EXPECT_NEAR(f.logits.at(t, k), f.steps[t].token_logits[k], 1e-10);
        }
        EXPECT_NEAR(f.logits.at(t, kVocab), f.steps[t].flag0_logit, 1e-10);
        EXPECT_NEAR(f.logits.at(t, kVocab + 1), f.steps[t].flag1_logit, 1e-10);
        EXPECT_EQ(f.loss_mask[t], f.routed.flags[t + 1]);
    }
}

TEST(GenerateRouted, ImmediateEndStopsAtTwoTokens) {
    StubDecoder stub([](std::size_t) { return row_for(kTargetFlag, kEndId); });
    Rng rng(1);
    std::vector<DecodeStep> steps;
    const RoutedSequence seq = generate_routed(stub, 10, 0.9, rng, 64, false, &steps);
    EXPECT_EQ(seq.tokens, (std::vector<TokenId>{kStartId, kEndId}));
    EXPECT_EQ(seq.flags, (std::vector<std::uint8_t>{1, 1}));
    EXPECT_EQ(steps.size(), 1u);
}

TEST(GenerateRouted, CapacityOverrideUsesArgmax) {
    // Always wants memory, token logits peaked at the end id.
    StubDecoder stub([](std::size_t) { return row_for(kMemoryFlag, kEndId); });
    Rng rng(1);
    std::vector<DecodeStep> steps;
    const RoutedSequence seq = generate_routed(stub, 10, 0.9, rng, 64, false, &steps);
    EXPECT_EQ(seq.memory_count, 10u);
    EXPECT_EQ(seq.tokens.size(), 12u);
    EXPECT_EQ(seq.tokens.back(), kEndId);
    EXPECT_EQ(seq.flags.back(), kTargetFlag);
    EXPECT_TRUE(steps.back().forced);
    EXPECT_NO_THROW(seq.check_invariants(10));
}

TEST(GenerateRouted, StopsAtMaxLen) {
    StubDecoder stub([](std::size_t) { return row_for(kTargetFlag, 5); });
    Rng rng(1);
    const RoutedSequence seq = generate_routed(stub, 2, 0.9, rng, 9, false);
    EXPECT_EQ(seq.tokens.size(), 9u);
}

TEST(GenerateRouted, AblationHidesMemoryFromLaterPositions) {
    const std::vector<std::uint8_t> script = {0, 1, 0, 1, 1};
    StubDecoder stub([&](std::size_t pos) {
        return pos < script.size() ? row_for(script[pos], 5) : row_for(kTargetFlag, kEndId);
    });
    Rng rng(1);
    const RoutedSequence seq = generate_routed(stub, 4, 0.9, rng, 64, true);
    ASSERT_GE(stub.rows.size(), 6u);
    for (std::size_t t = 0; t < stub.rows.size(); ++t) {
        ASSERT_EQ(stub.rows[t].size(), t + 1);
        for (std::size_t s = 0; s <= t; ++s) {
            EXPECT_EQ(stub.rows[t][s], seq.flags[s]) << "row " << t << " col " << s;
        }
    }
    // Without ablation every past position is visible.
    StubDecoder plain([&](std::size_t pos) {
        return pos < script.size() ? row_for(script[pos], 5) : row_for(kTargetFlag, kEndId);
    });
    Rng rng2(1);
    generate_routed(plain, 4, 0.9, rng2, 64, false);
    for (const auto& row : plain.rows) {
        EXPECT_EQ(row, std::vector<std::uint8_t>(row.size(), 1));
    }
}

TEST(GenerateRouted, ReproducibleForSeed) {
    const auto run = [](std::uint64_t seed) {
        Rng model(4);
        StubDecoder stub([&](std::size_t) { return random_row(model); });
        Rng rng(seed);
        return generate_routed(stub, 5, 0.9, rng, 30, false).tokens;
    };
    EXPECT_EQ(run(10), run(10));
}

TEST(DecodeTrace, OneJsonObjectPerStep) {
    StubDecoder stub([](std::size_t pos) {
        return pos == 0 ? row_for(kMemoryFlag, 5) : row_for(kTargetFlag, kEndId);
    });
    Rng rng(1);
    std::vector<DecodeStep> steps;
    generate_routed(stub, 3, 0.9, rng, 64, false, &steps);
    std::stringstream out;
    write_decode_trace(out, steps);
    std::string line;
    std::size_t n = 0;
    while (std::getline(out, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j.at("position").get<std::size_t>(), n + 1);
        EXPECT_EQ(j.at("token").get<TokenId>(), steps[n].token);
        EXPECT_EQ(j.at("flag").get<int>(), steps[n].flag);
        EXPECT_EQ(j.at("flag_logits").size(), 2u);
        EXPECT_EQ(j.at("token_logits").size(), kVocab);
        EXPECT_FALSE(j.at("forced").get<bool>());
        ++n;
    }
    EXPECT_EQ(n, 2u);
}
