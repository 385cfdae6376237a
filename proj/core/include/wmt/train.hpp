#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmt/adam.hpp"
#include "wmt/corpus.hpp"
#include "wmt/metrics.hpp"
#include "wmt/model.hpp"
#include "wmt/prediction.hpp"
#include "wmt/tokenizer.hpp"
#include "wmt/wm_decode.hpp"

namespace wmt {

class KeyValueConfig;

struct TrainConfig {
    std::size_t epochs = 20;
    /// Epochs 1..warm train without memory (M = 0).
    std::size_t warm = 5;
    std::size_t batch_size = 16;
    double learning_rate = 2e-3;
    /// Linear warmup length in optimizer steps, then inverse square root.
    std::size_t warmup_steps = 100;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;
    std::uint64_t seed = 1;
    /// Score and dump every k epochs (0 = only after the last epoch).
    std::size_t eval_every = 1;
    /// Cap on the number of evaluation pairs decoded for scores (0 = all).
    std::size_t eval_limit = 0;

    /// Throws InputError for warm > epochs, zero epochs, batch or warmup.
    void validate() const;
    KeyValueConfig to_key_value() const;
    static TrainConfig from_key_value(const KeyValueConfig& kv, const TrainConfig& base);
};

/// Learning rate at 1-based optimizer step `step`:
/// peak * min(step / warmup, sqrt(warmup / step)).
double learning_rate_at(std::size_t step, double peak, std::size_t warmup_steps);

/// Token ids of one pair; target framed by start and end ids.
struct EncodedPair {
    std::vector<TokenId> source;
    std::vector<TokenId> target;
};

EncodedPair encode_pair(const ParallelPair& pair, const Vocabulary& src_vocab,
                        const Vocabulary& tgt_vocab);
std::vector<EncodedPair> encode_corpus(std::span<const ParallelPair> pairs,
                                       const Vocabulary& src_vocab, const Vocabulary& tgt_vocab);

/// True when the pair fits max_len with the full memory budget.
bool fits_model(const EncodedPair& pair, const ModelConfig& config);

/// Mean cross-entropy (over the joint V + 2 softmax) of the rows whose
/// successor is target-flagged; row t is labelled with routed token t + 1.
/// Throws DimensionError when logits do not have |routed| - 1 rows,
/// ContractError when no row qualifies or the target-flagged tokens are not
/// y_real[1..] in order.
Tensor masked_cross_entropy(const Tensor& logits, const RoutedSequence& routed,
                            std::span<const TokenId> y_real);

struct EpochReport {
    std::size_t epoch = 0;
    bool memory_enabled = false;
    double train_loss = 0.0;
    /// Validation loss; the metrics CSV `loss` column.
    double loss = 0.0;
    /// Absent on epochs that were not scored.
    std::optional<ScorePair> scores;
    /// Decoded evaluation pairs behind `scores`; only populated while the
    /// epoch callback runs.
    std::vector<PredictionRecord> predictions;
};

/// Called after every epoch with the current parameters and the effective
/// model config (mem_size = 0 during warm epochs).
using EpochCallback =
    std::function<void(const EpochReport&, const ModelParams&, const ModelConfig&)>;

class Trainer {
public:
    Trainer(ModelConfig model, TrainConfig train, ModelParams params);

    /// One pass over `data` in a seeded shuffled order. Returns the mean
    /// per-sample loss. Non-finite values raise NumericError naming the
    /// epoch and sample.
    double train_epoch(std::span<const EncodedPair> data, std::size_t epoch);

    /// Mean masked loss without updates; routing draws are seeded per
    /// (epoch, sample).
    double evaluate_loss(std::span<const EncodedPair> data, std::size_t epoch) const;

    ModelConfig effective_config(std::size_t epoch) const;
    const ModelParams& params() const noexcept { return params_; }
    const ModelConfig& model_config() const noexcept { return model_; }
    const TrainConfig& train_config() const noexcept { return train_; }
    std::size_t optimizer_steps() const noexcept { return steps_; }

private:
    ModelConfig model_;
    TrainConfig train_;
    ModelParams params_;
    AdamOptimizer optimizer_;
    std::size_t steps_ = 0;
};

/// Greedy/nucleus generation for each pair, rendered to text.
std::vector<PredictionRecord> predict(const ModelParams& params, const ModelConfig& config,
                                      std::span<const ParallelPair> pairs,
                                      const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                      std::size_t epoch, std::uint64_t seed, bool ablate_memory);

/// Corpus BLEU-4 / METEOR-lite of the predictions against their references.
ScorePair score_predictions(std::span<const PredictionRecord> records);

struct TrainingResult {
    ModelParams params;
    std::vector<EpochReport> history;
};

/// Full schedule: `train_config.epochs` epochs, memory enabled after the
/// warm epochs, validation loss every epoch, scores every eval_every epochs
/// on `eval_pairs` (falls back to the training pairs when empty).
/// `initial` resumes from existing parameters; otherwise they are drawn from
/// model.seed.
TrainingResult run_training(std::span<const ParallelPair> train_pairs,
                            std::span<const ParallelPair> eval_pairs, const Vocabulary& src_vocab,
                            const Vocabulary& tgt_vocab, const TrainConfig& train_config,
                            const ModelConfig& model, const ModelParams* initial = nullptr,
                            const EpochCallback& on_epoch = {});

/// `epoch,loss,bleu,meteor` with an empty field for unscored epochs.
std::string metrics_csv(std::span<const EpochReport> history);

}  // namespace wmt
