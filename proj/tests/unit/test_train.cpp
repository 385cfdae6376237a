#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <sstream>

#include "wmt/checkpoint.hpp"
#include "wmt/error.hpp"
#include "wmt/ops.hpp"
#include "wmt/prediction.hpp"
#include "wmt/synthetic.hpp"
#include "wmt/train.hpp"

using namespace wmt;

namespace {

// Five-token vocabulary (V = 5), so rows are 7 wide.
Tensor logits_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Tensor t = Tensor::matrix(rows);
    t.set_requires_grad(true);
    return t;
}

double log_softmax_at(std::span<const double> row, std::size_t k) {
    double z = 0.0;
    for (double x : row) {
        z += std::exp(x);
    }
    return row[k] - std::log(z);
}

struct SmallSetup {
    std::vector<ParallelPair> pairs;
    Vocabulary src;
    Vocabulary tgt;
    ModelConfig model;
    TrainConfig train;
};

SmallSetup small_setup(std::size_t n = 24, std::size_t epochs = 3) {
    SmallSetup s;
    s.pairs = generate_synthetic_tier(1, n, 3);
    std::vector<std::string> srcs, refs;
    for (const auto& p : s.pairs) {
        srcs.push_back(p.source);
        refs.push_back(p.reference);
    }
    s.src = Vocabulary::build(srcs);
    s.tgt = Vocabulary::build(refs);
    s.model.d_model = 8;
    s.model.n_layers = 1;
    s.model.n_heads = 2;
    s.model.d_ff = 16;
    s.model.src_vocab_size = s.src.size();
    s.model.tgt_vocab_size = s.tgt.size();
    s.model.mem_size = 2;
    s.model.max_len = 32;
    s.model.seed = 4;
    s.train.epochs = epochs;
    s.train.warm = 1;
    s.train.batch_size = 4;
    s.train.warmup_steps = 4;
    s.train.learning_rate = 5e-3;
    s.train.seed = 9;
    return s;
}

std::string dump_text(std::span<const PredictionRecord> records) {
    std::ostringstream out;
    write_prediction_dump(out, records, "test dump");
    return out.str();
}

}  // namespace

TEST(LearningRate, WarmupThenInverseSquareRoot) {
    EXPECT_DOUBLE_EQ(learning_rate_at(1, 1e-3, 100), 1e-5);
    EXPECT_DOUBLE_EQ(learning_rate_at(50, 1e-3, 100), 5e-4);
    EXPECT_DOUBLE_EQ(learning_rate_at(100, 1e-3, 100), 1e-3);
    EXPECT_DOUBLE_EQ(learning_rate_at(400, 1e-3, 100), 5e-4);
    EXPECT_LT(learning_rate_at(401, 1e-3, 100), learning_rate_at(400, 1e-3, 100));
}

TEST(TrainConfig, ValidateRejectsBadSchedules) {
    TrainConfig ok;
    EXPECT_NO_THROW(ok.validate());
    TrainConfig warm = ok;
    warm.warm = ok.epochs + 1;
    EXPECT_THROW(warm.validate(), InputError);
    TrainConfig zero = ok;
    zero.epochs = 0;
    EXPECT_THROW(zero.validate(), InputError);
    TrainConfig batch = ok;
    batch.batch_size = 0;
    EXPECT_THROW(batch.validate(), InputError);
}

// y_real = [<s>, 4, </s>] routed as [<s>, 4, mem 3, </s>] with flags
// [1, 1, 0, 1]. Row 1 predicts the memory token and is excluded.
TEST(MaskedCrossEntropy, HandExample) {
    const std::vector<TokenId> y_real = {kStartId, 4, kEndId};
    const RoutedSequence routed{{kStartId, 4, 3, kEndId}, {1, 1, 0, 1}, 1};
    const Tensor logits =
        logits_rows({{0, 0, 0, 0, 1, 0, 0}, {5, -3, 2, 9, 0, 1, 0}, {0, 0, 2, 0, 0, 0, 0}});
    const double e = std::exp(1.0);
    const double e2 = std::exp(2.0);
    const double expected = -0.5 * (std::log(e / (6 + e)) + std::log(e2 / (6 + e2)));
    EXPECT_NEAR(masked_cross_entropy(logits, routed, y_real).item(), expected, 1e-12);
}

TEST(MaskedCrossEntropy, AllTargetsIsStandardCrossEntropy) {
    const std::vector<TokenId> y_real = {kStartId, 4, 3, kEndId};
    const RoutedSequence routed{y_real, {1, 1, 1, 1}, 0};
    const Tensor logits = logits_rows({{0.1, 0.2, -1, 0.5, 1, 0, 0.3},
                                       {1, 0, 0, 2, 0.5, -0.5, 0},
                                       {0, 0.7, 1.5, 0, 0, 0.2, 0.4}});
    double expected = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
        const auto row = logits.values().subspan(t * 7, 7);
        expected -= log_softmax_at(row, static_cast<std::size_t>(y_real[t + 1]));
    }
    EXPECT_NEAR(masked_cross_entropy(logits, routed, y_real).item(), expected / 3, 1e-12);
}

TEST(MaskedCrossEntropy, MemorySuccessorRowsAreInert) {
    const std::vector<TokenId> y_real = {kStartId, 4, kEndId};
    const RoutedSequence routed{{kStartId, 3, 4, 3, kEndId}, {1, 0, 1, 0, 1}, 2};
    Rng rng(3);
    const auto make = [&](double fill) {
        std::vector<double> v(4 * 7);
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = 2.0 * uniform_unit(rng) - 1.0;
        }
        for (std::size_t row : {0u, 2u}) {
            for (std::size_t c = 0; c < 7; ++c) {
                v[row * 7 + c] = fill * static_cast<double>(c + 1);
            }
        }
        return Tensor({4, 7}, std::move(v), true);
    };
    Rng keep = rng;
    const Tensor a = make(0.0);
    rng = keep;
    const Tensor b = make(37.5);
    EXPECT_EQ(masked_cross_entropy(a, routed, y_real).item(),
              masked_cross_entropy(b, routed, y_real).item());

    Tape tape;
    TapeScope scope(tape);
    const Tensor loss = masked_cross_entropy(b, routed, y_real);
    tape.backward(loss);
    ASSERT_TRUE(b.has_grad());
    for (std::size_t row = 0; row < 4; ++row) {
        double mass = 0.0;
        for (std::size_t c = 0; c < 7; ++c) {
            mass += std::abs(b.grad()[row * 7 + c]);
        }
        if (row == 0 || row == 2) {
            EXPECT_EQ(mass, 0.0) << "row " << row;
        } else {
            EXPECT_GT(mass, 0.0) << "row " << row;
        }
    }
}

TEST(MaskedCrossEntropy, ContractAndShapeErrors) {
    const std::vector<TokenId> y_real = {kStartId, 4, kEndId};
    const RoutedSequence routed{{kStartId, 4, kEndId}, {1, 1, 1}, 0};
    EXPECT_THROW(masked_cross_entropy(Tensor({3, 7}), routed, y_real), DimensionError);
    const std::vector<TokenId> other = {kStartId, 3, kEndId};
    EXPECT_THROW(masked_cross_entropy(Tensor({2, 7}), routed, other), ContractError);
    const RoutedSequence only_memory{{kStartId, 4}, {1, 0}, 1};
    EXPECT_THROW(masked_cross_entropy(Tensor({1, 7}), only_memory, std::vector<TokenId>{kStartId}),
                 ContractError);
}

TEST(EncodePair, FramesTargetAndChecksFit) {
    SmallSetup s = small_setup();
    const EncodedPair e = encode_pair(s.pairs[0], s.src, s.tgt);
    EXPECT_EQ(e.target.front(), kStartId);
    EXPECT_EQ(e.target.back(), kEndId);
    EXPECT_EQ(e.target.size(), s.tgt.encode(s.pairs[0].reference).size() + 2);
    EXPECT_TRUE(fits_model(e, s.model));
    ModelConfig tight = s.model;
    tight.max_len = e.target.size() + tight.mem_size - 1;
    EXPECT_FALSE(fits_model(e, tight));
}

TEST(RunTraining, SameSeedIsBitIdentical) {
    const SmallSetup s = small_setup();
    const auto a = run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model);
    const auto b = run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model);
    const auto pa = a.params.parameters();
    const auto pb = b.params.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t j = 0; j < pa[i].size(); ++j) {
            ASSERT_EQ(std::bit_cast<std::uint64_t>(pa[i].values()[j]),
                      std::bit_cast<std::uint64_t>(pb[i].values()[j]));
        }
    }
    EXPECT_EQ(metrics_csv(a.history), metrics_csv(b.history));
}

TEST(RunTraining, WarmEpochsRunWithoutMemory) {
    SmallSetup s = small_setup(16, 3);
    s.train.warm = 3;
    std::vector<std::size_t> mem_sizes;
    const auto r =
        run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model, nullptr,
                     [&](const EpochReport& rep, const ModelParams&, const ModelConfig& c) {
                         mem_sizes.push_back(c.mem_size);
                         EXPECT_FALSE(rep.memory_enabled);
                         for (const auto& rec : rep.predictions) {
                             EXPECT_TRUE(rec.memory.empty());
                         }
                     });
    EXPECT_EQ(mem_sizes, (std::vector<std::size_t>{0, 0, 0}));
    ASSERT_EQ(r.history.size(), 3u);
    EXPECT_TRUE(r.history.back().predictions.empty());

    s.train.warm = 1;
    std::vector<std::size_t> switched;
    run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model, nullptr,
                 [&](const EpochReport&, const ModelParams&, const ModelConfig& c) {
                     switched.push_back(c.mem_size);
                 });
    EXPECT_EQ(switched, (std::vector<std::size_t>{0, 2, 2}));
}

TEST(RunTraining, TrainingLossFalls) {
    SmallSetup s = small_setup(32, 8);
    s.train.warm = 8;
    s.train.eval_every = 0;
    const auto r = run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model);
    ASSERT_EQ(r.history.size(), 8u);
    const double early = r.history[0].train_loss + r.history[1].train_loss;
    const double late = r.history[6].train_loss + r.history[7].train_loss;
    EXPECT_LT(late, 0.8 * early);
    EXPECT_FALSE(r.history[3].scores.has_value());
    EXPECT_TRUE(r.history[7].scores.has_value());
}

TEST(Checkpoint, ReloadedParamsGiveIdenticalValidationLoss) {
    const SmallSetup s = small_setup(16, 2);
    const auto r = run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model);
    std::stringstream buf;
    write_checkpoint(buf, Checkpoint{s.model, r.params, {}});
    const Checkpoint back = read_checkpoint(buf);
    const auto data = encode_corpus(s.pairs, s.src, s.tgt);
    const Trainer a(s.model, s.train, r.params.clone());
    const Trainer b(back.config, s.train, back.params);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.evaluate_loss(data, 2)),
              std::bit_cast<std::uint64_t>(b.evaluate_loss(data, 2)));
}

TEST(MetricsCsv, EmptyFieldsForUnscoredEpochs) {
    EpochReport scored;
    scored.epoch = 1;
    scored.loss = 2.5;
    scored.scores = ScorePair{41.25, 60.5, 10};
    EpochReport unscored;
    unscored.epoch = 2;
    unscored.loss = 1.0;
    const std::vector<EpochReport> history = {scored, unscored};
    EXPECT_EQ(metrics_csv(history),
              "epoch,loss,bleu,meteor\n1,2.500000,41.2500,60.5000\n2,1.000000,,\n");
}

TEST(PredictionDump, EmptyDumpIsHeaderOnly) {
    EXPECT_EQ(dump_text({}), "# test dump\n");
    std::istringstream in(dump_text({}));
    EXPECT_TRUE(read_prediction_dump(in).empty());
}

TEST(PredictionDump, RoundTripAndErrors) {
    PredictionRecord r;
    r.source = "a b";
    r.reference = "x \"y\"";
    r.prediction = "x";
    r.memory = {"y", "</s>"};
    r.flags = {1, 0, 1, 0, 1};
    r.tag = "tier1";
    r.epoch = 3;
    r.seed = 18446744073709551615ULL;
    const std::vector<PredictionRecord> records = {r, r};
    std::istringstream in(dump_text(records));
    EXPECT_EQ(read_prediction_dump(in), records);

    std::istringstream bad_mem(
        "{\"src\":\"a\",\"ref\":\"b\",\"pred\":\"c\",\"mem\":[\"q\"],\"flags\":[1,1],"
        "\"tag\":\"t\",\"epoch\":1,\"seed\":1}\n");
    EXPECT_THROW(read_prediction_dump(bad_mem), InputError);
    std::istringstream bad_json("# h\n{not json\n");
    try {
        read_prediction_dump(bad_json, "dump.jsonl");
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("dump.jsonl:2"), std::string::npos) << e.what();
    }
}

TEST(Predict, OneRecordPerPairAndByteIdenticalRedump) {
    const SmallSetup s = small_setup(12, 2);
    const auto r = run_training(s.pairs, {}, s.src, s.tgt, s.train, s.model);
    const auto a = predict(r.params, s.model, s.pairs, s.src, s.tgt, 2, 77, false);
    const auto b = predict(r.params, s.model, s.pairs, s.src, s.tgt, 2, 77, false);
    ASSERT_EQ(a.size(), s.pairs.size());
    EXPECT_EQ(dump_text(a), dump_text(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].source, s.pairs[i].source);
        EXPECT_EQ(a[i].reference, s.pairs[i].reference);
        EXPECT_EQ(a[i].epoch, 2u);
        EXPECT_LE(a[i].memory.size(), s.model.mem_size);
    }
    const auto ablated = predict(r.params, s.model, s.pairs, s.src, s.tgt, 2, 77, true);
    EXPECT_EQ(ablated.size(), a.size());
}
