#include "wmt/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "wmt/error.hpp"
#include "wmt/key_value.hpp"
#include "wmt/ops.hpp"

namespace wmt {

namespace {

/// Fisher-Yates on uniform_unit so the order is identical on every
/// standard library.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    return order;
}

Tensor sample_loss(const EncodedPair& pair, const ModelConfig& config, const ModelParams& params,
                   Rng& rng) {
    const EncoderOutput encoded = encoder_forward(pair.source, config, params);
    const TrainingForward fwd = training_forward_pass(encoded, pair.target, config, params, rng);
    return masked_cross_entropy(fwd.logits, fwd.routed, pair.target);
}

std::string fmt_score(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0) {
        throw InputError("train config: epochs must be positive");
    }
    if (warm > epochs) {
        throw InputError(fmt::format("train config: warm ({}) exceeds epochs ({})", warm, epochs));
    }
    if (batch_size == 0) {
        throw InputError("train config: batch_size must be positive");
    }
    if (warmup_steps == 0) {
        throw InputError("train config: warmup_steps must be positive");
    }
    if (!(learning_rate > 0.0)) {
        throw InputError("train config: learning_rate must be positive");
    }
}

KeyValueConfig TrainConfig::to_key_value() const {
    KeyValueConfig kv;
    kv.set("epochs", std::to_string(epochs));
    kv.set("warm", std::to_string(warm));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("learning_rate", fmt::format("{}", learning_rate));
    kv.set("warmup_steps", std::to_string(warmup_steps));
    kv.set("beta1", fmt::format("{}", beta1));
    kv.set("beta2", fmt::format("{}", beta2));
    kv.set("epsilon", fmt::format("{}", epsilon));
    kv.set("train_seed", std::to_string(seed));
    kv.set("eval_every", std::to_string(eval_every));
    kv.set("eval_limit", std::to_string(eval_limit));
    return kv;
}

TrainConfig TrainConfig::from_key_value(const KeyValueConfig& kv, const TrainConfig& base) {
    auto count = [&](std::string_view key, std::size_t fallback) {
        const long long v = kv.get_int(key, static_cast<long long>(fallback));
        if (v < 0) {
            throw InputError(fmt::format("train config: {} must be >= 0", key));
        }
        return static_cast<std::size_t>(v);
    };
    TrainConfig c = base;
    c.epochs = count("epochs", base.epochs);
    c.warm = count("warm", base.warm);
    c.batch_size = count("batch_size", base.batch_size);
    c.learning_rate = kv.get_double("learning_rate", base.learning_rate);
    c.warmup_steps = count("warmup_steps", base.warmup_steps);
    c.beta1 = kv.get_double("beta1", base.beta1);
    c.beta2 = kv.get_double("beta2", base.beta2);
    c.epsilon = kv.get_double("epsilon", base.epsilon);
    c.seed = count("train_seed", static_cast<std::size_t>(base.seed));
    c.eval_every = count("eval_every", base.eval_every);
    c.eval_limit = count("eval_limit", base.eval_limit);
    return c;
}

double learning_rate_at(std::size_t step, double peak, std::size_t warmup_steps) {
    if (step == 0 || warmup_steps == 0) {
        throw ContractError("learning_rate_at: step and warmup_steps are 1-based");
    }
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(warmup_steps);
    return peak * std::min(s / w, std::sqrt(w / s));
}

EncodedPair encode_pair(const ParallelPair& pair, const Vocabulary& src_vocab,
                        const Vocabulary& tgt_vocab) {
    EncodedPair e;
    e.source = src_vocab.encode(pair.source);
    if (e.source.empty()) {
        throw InputError("pair has an empty source after tokenization: '" + pair.source + "'");
    }
    e.target.push_back(kStartId);
    for (TokenId id : tgt_vocab.encode(pair.reference)) {
        e.target.push_back(id);
    }
    e.target.push_back(kEndId);
    return e;
}

std::vector<EncodedPair> encode_corpus(std::span<const ParallelPair> pairs,
                                       const Vocabulary& src_vocab, const Vocabulary& tgt_vocab) {
    std::vector<EncodedPair> out;
    out.reserve(pairs.size());
    for (const ParallelPair& p : pairs) {
        out.push_back(encode_pair(p, src_vocab, tgt_vocab));
    }
    return out;
}

bool fits_model(const EncodedPair& pair, const ModelConfig& config) {
    return !pair.source.empty() && pair.source.size() <= config.max_len &&
           pair.target.size() + config.mem_size <= config.max_len;
}

Tensor masked_cross_entropy(const Tensor& logits, const RoutedSequence& routed,
                            std::span<const TokenId> y_real) {
    if (routed.tokens.size() < 2 || logits.rank() != 2 ||
        logits.rows() != routed.tokens.size() - 1) {
        throw DimensionError(fmt::format("masked_cross_entropy: logits {} for a routed sequence of {}",
                                         shape_string(logits.shape()), routed.tokens.size()));
    }
    if (routed.flags.size() != routed.tokens.size()) {
        throw ContractError("masked_cross_entropy: token and flag counts differ");
    }
    const std::size_t vocab = logits.cols() - 2;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> labels;
    std::size_t next_target = 1;
    for (std::size_t t = 0; t + 1 < routed.tokens.size(); ++t) {
        if (routed.flags[t + 1] != kTargetFlag) {
            continue;
        }
        const TokenId label = routed.tokens[t + 1];
        if (next_target >= y_real.size() || y_real[next_target] != label) {
            throw ContractError(fmt::format(
                "masked_cross_entropy: target-flagged token at {} does not match y_real[{}]", t + 1,
                next_target));
        }
        if (label < 0 || static_cast<std::size_t>(label) >= vocab) {
            throw ContractError(fmt::format("masked_cross_entropy: label {} outside V = {}", label, vocab));
        }
        ++next_target;
        rows.push_back(t);
        labels.push_back(static_cast<std::size_t>(label));
    }
    if (rows.empty()) {
        throw ContractError("masked_cross_entropy: no position is followed by a target token");
    }
    const Tensor picked = select_entries(log_softmax(logits, 1), rows, labels);
    return scale(mean(picked), -1.0);
}

Trainer::Trainer(ModelConfig model, TrainConfig train, ModelParams params)
    : model_(std::move(model)),
      train_(std::move(train)),
      params_(std::move(params)),
      optimizer_(params_.parameters(), train_.beta1, train_.beta2, train_.epsilon) {
    model_.validate();
    train_.validate();
}

ModelConfig Trainer::effective_config(std::size_t epoch) const {
    ModelConfig c = model_;
    if (epoch <= train_.warm) {
        c.mem_size = 0;
    }
    return c;
}

double Trainer::train_epoch(std::span<const EncodedPair> data, std::size_t epoch) {
    if (data.empty()) {
        throw InputError("train_epoch: no training pairs");
    }
    const ModelConfig config = effective_config(epoch);
    const std::vector<std::size_t> order = shuffled_order(data.size(), derive_seed(train_.seed, {epoch}));
    double total = 0.0;
    optimizer_.zero_grad();
    std::size_t in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t idx = order[k];
        const std::size_t batch_len = std::min(train_.batch_size, order.size() - (k - in_batch));
        try {
            Rng rng(derive_seed(train_.seed, {epoch, idx, 1}));
            Tape tape;
            TapeScope scope(tape);
            const Tensor loss = sample_loss(data[idx], config, params_, rng);
            total += loss.item();
            tape.backward(scale(loss, 1.0 / static_cast<double>(batch_len)));
        } catch (const NumericError& e) {
            throw NumericError(fmt::format("epoch {} sample {}: {}", epoch, idx, e.what()));
        }
        if (++in_batch == batch_len) {
            ++steps_;
            optimizer_.step(learning_rate_at(steps_, train_.learning_rate, train_.warmup_steps));
            optimizer_.zero_grad();
            in_batch = 0;
        }
    }
    const double mean_loss = total / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
        throw NumericError(fmt::format("epoch {}: non-finite mean loss", epoch));
    }
    return mean_loss;
}

double Trainer::evaluate_loss(std::span<const EncodedPair> data, std::size_t epoch) const {
    if (data.empty()) {
        throw InputError("evaluate_loss: no pairs");
    }
    const ModelConfig config = effective_config(epoch);
    NoGradScope no_grad;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Rng rng(derive_seed(train_.seed, {epoch, i, 2}));
        total += sample_loss(data[i], config, params_, rng).item();
    }
    return total / static_cast<double>(data.size());
}

std::vector<PredictionRecord> predict(const ModelParams& params, const ModelConfig& config,
                                      std::span<const ParallelPair> pairs,
                                      const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                      std::size_t epoch, std::uint64_t seed, bool ablate_memory) {
    std::vector<PredictionRecord> records;
    records.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::vector<TokenId> src = src_vocab.encode(pairs[i].source);
        if (src.empty()) {
            throw InputError("predict: empty source at pair " + std::to_string(i));
        }
        if (src.size() > config.max_len) {
            src.resize(config.max_len);
        }
        Rng rng(derive_seed(seed, {i}));
        const EncoderOutput encoded = [&] {
            NoGradScope no_grad;
            return encoder_forward(src, config, params);
        }();
        const RoutedSequence routed = generate(encoded, config, params, rng, ablate_memory);
        const auto [targets, memory] = split_routed(routed);
        PredictionRecord r;
        r.source = pairs[i].source;
        r.reference = pairs[i].reference;
        r.prediction = tgt_vocab.decode(targets);
        for (TokenId id : memory) {
            r.memory.push_back(tgt_vocab.token(id));
        }
        r.flags = routed.flags;
        r.tag = pairs[i].tag;
        r.epoch = epoch;
        r.seed = seed;
        records.push_back(std::move(r));
    }
    return records;
}

ScorePair score_predictions(std::span<const PredictionRecord> records) {
    std::vector<std::string> hyps;
    std::vector<std::string> refs;
    for (const PredictionRecord& r : records) {
        hyps.push_back(r.prediction);
        refs.push_back(r.reference);
    }
    return score_corpus(hyps, refs);
}

TrainingResult run_training(std::span<const ParallelPair> train_pairs,
                            std::span<const ParallelPair> eval_pairs, const Vocabulary& src_vocab,
                            const Vocabulary& tgt_vocab, const TrainConfig& train_config,
                            const ModelConfig& model, const ModelParams* initial,
                            const EpochCallback& on_epoch) {
    train_config.validate();
    model.validate();
    if (train_pairs.empty()) {
        throw InputError("run_training: empty training corpus");
    }
    const std::vector<EncodedPair> train_data = encode_corpus(train_pairs, src_vocab, tgt_vocab);
    for (std::size_t i = 0; i < train_data.size(); ++i) {
        if (!fits_model(train_data[i], model)) {
            throw InputError(fmt::format(
                "training pair {} (source {} / target {} ids) does not fit max_len {} with M = {}", i,
                train_data[i].source.size(), train_data[i].target.size(), model.max_len,
                model.mem_size));
        }
    }
    std::span<const ParallelPair> eval_span = eval_pairs.empty() ? train_pairs : eval_pairs;
    if (train_config.eval_limit > 0 && eval_span.size() > train_config.eval_limit) {
        eval_span = eval_span.first(train_config.eval_limit);
    }
    std::vector<EncodedPair> eval_data = encode_corpus(eval_span, src_vocab, tgt_vocab);
    std::erase_if(eval_data, [&](const EncodedPair& p) { return !fits_model(p, model); });
    if (eval_data.empty()) {
        eval_data = train_data;
    }

    ModelParams params;
    if (initial != nullptr) {
        params = initial->clone();
    } else {
        Rng init_rng(model.seed);
        params = init_params(model, init_rng);
    }
    Trainer trainer(model, train_config, std::move(params));
    TrainingResult result;
    for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
        EpochReport report;
        report.epoch = epoch;
        report.memory_enabled = epoch > train_config.warm && model.mem_size > 0;
        report.train_loss = trainer.train_epoch(train_data, epoch);
        report.loss = trainer.evaluate_loss(eval_data, epoch);
        const bool scored = epoch == train_config.epochs ||
                            (train_config.eval_every > 0 && epoch % train_config.eval_every == 0);
        const ModelConfig effective = trainer.effective_config(epoch);
        if (scored) {
            auto records = predict(trainer.params(), effective, eval_span, src_vocab, tgt_vocab,
                                   epoch, train_config.seed, false);
            report.scores = score_predictions(records);
            report.predictions = std::move(records);
        }
        if (on_epoch) {
            on_epoch(report, trainer.params(), effective);
        }
        report.predictions.clear();
        result.history.push_back(std::move(report));
    }
    result.params = trainer.params().clone();
    return result;
}

std::string metrics_csv(std::span<const EpochReport> history) {
    std::ostringstream out;
    out << "epoch,loss,bleu,meteor\n";
    for (const EpochReport& r : history) {
        out << r.epoch << ',' << fmt::format("{:.6f}", r.loss) << ',';
        if (r.scores) {
            out << fmt_score(r.scores->bleu4) << ',' << fmt_score(r.scores->meteor_lite);
        } else {
            out << ',';
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace wmt
