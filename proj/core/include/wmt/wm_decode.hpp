#pragma once
// Working-memory routing: how target and memory tokens are interleaved in
// the decoder input during teacher-forced training and free generation.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "wmt/incremental_decoder.hpp"
#include "wmt/model.hpp"
#include "wmt/rng.hpp"
#include "wmt/tensor.hpp"

namespace wmt {

inline constexpr std::uint8_t kMemoryFlag = 0;
inline constexpr std::uint8_t kTargetFlag = 1;

/// Decoder input sequence with its aligned type flags.
struct RoutedSequence {
    std::vector<TokenId> tokens;
    std::vector<std::uint8_t> flags;
    std::size_t memory_count = 0;

    /// Throws ContractError unless |tokens| == |flags|, flags[0] == 1,
    /// memory_count equals the number of zero flags and never exceeds
    /// `mem_size` on any prefix.
    void check_invariants(std::size_t mem_size) const;
};

struct DecodeStep {
    /// Token appended after this step.
    TokenId token = kPadId;
    std::uint8_t flag = kTargetFlag;
    std::vector<double> token_logits;
    double flag0_logit = 0.0;
    double flag1_logit = 0.0;
    /// The flag differs from the raw argmax because of a capacity or
    /// target-exhaustion override.
    bool forced = false;
};

/// Position t may attend positions <= t. Throws ContractError for len == 0.
AttentionMask make_look_ahead_mask(std::size_t len);

/// Look-ahead mask that additionally hides every memory position: row t
/// allows {s <= t : flags[s] == 1}.
AttentionMask make_memory_ablation_mask(std::span<const std::uint8_t> flags);

/// Ids of the nucleus: tokens sorted by probability (lower id first on
/// ties), truncated to the shortest prefix whose mass reaches p.
std::vector<TokenId> nucleus_support(std::span<const double> token_logits, double p);

/// Renormalized nucleus probabilities, one entry per token (zero outside
/// the support).
std::vector<double> nucleus_distribution(std::span<const double> token_logits, double p);

/// Draws one token from the nucleus. Throws ContractError unless 0 < p <= 1.
TokenId nucleus_sample(std::span<const double> token_logits, double p, Rng& rng);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

/// Reads the flag from the last two columns (memory flag wins ties), then
/// picks the token by argmax for flag 1 or nucleus sampling for flag 0.
/// `rng` is touched only on the flag-0 branch. Selection is the same at
/// training and inference time; only what is appended afterwards differs.
DecodeStep select_flag_and_token(std::span<const double> logit_row, Rng& rng, double p_nucleus);

struct RoutingResult {
    RoutedSequence routed;
    std::vector<DecodeStep> steps;
};

/// Teacher-forced routing loop against any step decoder. `y_real` must start
/// with the start id and end with the end id. The result always has
/// |y_real| + mem_size tokens with exactly mem_size memory flags.
/// Throws InputError when |y_real| + mem_size exceeds max_len.
RoutingResult route_teacher_forced(StepDecoder& decoder, std::span<const TokenId> y_real,
                                   std::size_t mem_size, double p_nucleus, Rng& rng,
                                   std::size_t max_len);

struct TrainingForward {
    RoutedSequence routed;
    /// [|routed| - 1 x (V + 2)]; row t predicts routed token t + 1.
    Tensor logits;
    /// 1 where row t contributes to the loss (its successor is a target
    /// token), 0 where the successor is a memory token.
    std::vector<std::uint8_t> loss_mask;
    std::vector<DecodeStep> steps;
};

/// Routes y_real with the cached decoder (no tape), then recomputes all
/// logits in one causal pass that records on the active tape. By causality
/// the logits equal those seen during routing.
TrainingForward training_forward_pass(const EncoderOutput& encoded, std::span<const TokenId> y_real,
                                      const ModelConfig& config, const ModelParams& params,
                                      Rng& rng);

/// Free-running generation against a step decoder. Starts from
/// ([start], [1]); stops after a target-flagged end token or at max_len.
RoutedSequence generate_routed(StepDecoder& decoder, std::size_t mem_size, double p_nucleus,
                               Rng& rng, std::size_t max_len, bool ablate_memory,
                               std::vector<DecodeStep>* steps = nullptr);

RoutedSequence generate(const EncoderOutput& encoded, const ModelConfig& config,
                        const ModelParams& params, Rng& rng, bool ablate_memory,
                        std::vector<DecodeStep>* steps = nullptr);

/// Order-preserving partition into (target tokens, memory tokens).
std::pair<std::vector<TokenId>, std::vector<TokenId>> split_routed(const RoutedSequence& seq);

/// Inverse of split_routed given the flag pattern.
RoutedSequence merge_routed(std::span<const TokenId> targets, std::span<const TokenId> memory,
                            std::span<const std::uint8_t> flags);

/// One JSON object per step: position, token, flag, flag_logits,
/// token_logits, forced.
void write_decode_trace(std::ostream& out, std::span<const DecodeStep> steps);

}  // namespace wmt
