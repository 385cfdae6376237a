#pragma once
// Encoder-decoder Transformer whose decoder input carries a per-token type
// flag (1 = target token, 0 = working-memory token) and whose output layer
// is two units wider than the target vocabulary.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmt/rng.hpp"
#include "wmt/tensor.hpp"
#include "wmt/tokenizer.hpp"

namespace wmt {

class KeyValueConfig;

struct ModelConfig {
    std::size_t d_model = 64;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_ff = 128;
    std::size_t src_vocab_size = 0;
    /// V. The output projection is V + 2 wide.
    std::size_t tgt_vocab_size = 0;
    /// M, working-memory budget in tokens.
    std::size_t mem_size = 10;
    double p_nucleus = 0.9;
    std::size_t max_len = 64;
    std::uint64_t seed = 1;

    /// Throws InputError naming the offending field.
    void validate() const;
    std::size_t output_width() const noexcept { return tgt_vocab_size + 2; }
    std::size_t flag0_column() const noexcept { return tgt_vocab_size; }
    std::size_t flag1_column() const noexcept { return tgt_vocab_size + 1; }

    KeyValueConfig to_key_value() const;
    /// Reads d_model, n_layers, n_heads, d_ff, src_vocab_size, tgt_vocab_size,
    /// mem_size, p_nucleus, max_len and seed, defaulting to `base`.
    static ModelConfig from_key_value(const KeyValueConfig& kv, const ModelConfig& base);
    static ModelConfig from_key_value(const KeyValueConfig& kv);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Boolean attention pattern, row-major [queries x keys]; 1 = may attend.
struct AttentionMask {
    std::size_t queries = 0;
    std::size_t keys = 0;
    std::vector<std::uint8_t> allowed;

    static AttentionMask full(std::size_t queries, std::size_t keys);
    bool at(std::size_t q, std::size_t k) const { return allowed[q * keys + k] != 0; }
    /// Additive bias: 0 where allowed, -1e9 elsewhere.
    Tensor bias() const;
};

/// Keys holding the pad id are hidden from every query.
AttentionMask make_padding_mask(std::size_t queries, std::span<const TokenId> key_ids);

struct LinearParams {
    Tensor weight;  // [in x out]
    Tensor bias;    // [out]
};

struct LayerNormParams {
    Tensor gamma;
    Tensor beta;
};

struct AttentionParams {
    LinearParams query;
    LinearParams key;
    LinearParams value;
    LinearParams output;
};

struct FeedForwardParams {
    LinearParams inner;
    LinearParams outer;
};

struct EncoderLayerParams {
    AttentionParams self_attention;
    LayerNormParams norm_attention;
    FeedForwardParams feed_forward;
    LayerNormParams norm_feed_forward;
};

struct DecoderLayerParams {
    AttentionParams self_attention;
    LayerNormParams norm_self;
    AttentionParams cross_attention;
    LayerNormParams norm_cross;
    FeedForwardParams feed_forward;
    LayerNormParams norm_out;
};

struct ModelParams {
    Tensor src_embedding;  // [src_vocab x d_model]
    Tensor tgt_embedding;  // [V x d_model]
    /// Row 0 = memory flag, row 1 = target flag.
    Tensor flag_table;     // [2 x d_model]
    std::vector<EncoderLayerParams> encoder;
    std::vector<DecoderLayerParams> decoder;
    LinearParams output;   // d_model -> V + 2

    /// Stable, unique names in a fixed traversal order.
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;
    /// Deep copy with fresh storage.
    ModelParams clone() const;
};

/// Xavier-uniform weights, zero biases, unit LayerNorm gains, N(0, d^-1/2)
/// embeddings. All tensors require gradients.
ModelParams init_params(const ModelConfig& config, Rng& rng);
/// Same shapes, all zeros.
ModelParams zero_params(const ModelConfig& config);

/// Sinusoidal table [len x d_model]: sin on even columns, cos on odd.
Tensor positional_encoding(std::size_t len, std::size_t d_model);

/// out[t] = token_emb[ids[t]] * sqrt(d) + flag_table[flags[t]] + pos_table[t].
/// Throws ContractError for a flag outside {0, 1}, DimensionError when the
/// lengths disagree or pos_table is too short.
Tensor embed_tokens_with_flags(std::span<const TokenId> ids, std::span<const std::uint8_t> flags,
                               const Tensor& token_embedding, const Tensor& flag_table,
                               const Tensor& pos_table);

Tensor linear(const Tensor& x, const LinearParams& p);

/// Multi-head scaled dot-product attention of `queries` over `memory`.
Tensor multi_head_attention(const Tensor& queries, const Tensor& memory,
                            const AttentionParams& p, std::size_t n_heads,
                            const AttentionMask& mask);

struct EncoderOutput {
    Tensor activation;  // [src_len x d_model]
    /// Copy of the source ids, used to mask padding in cross-attention.
    std::vector<TokenId> src_ids;
};

/// Throws InputError for an empty source or one longer than max_len.
EncoderOutput encoder_forward(std::span<const TokenId> src_ids, const ModelConfig& config,
                              const ModelParams& params);

struct LayerActivations {
    Tensor a_self;
    Tensor a_cross;
    Tensor d_out;
};

struct ActivationTrace {
    std::vector<LayerActivations> layers;
};

/// One decoder layer: self-attention, cross-attention and feed-forward, each
/// wrapped as LayerNorm(x + sublayer(x)). Appends to `trace` when given.
/// Throws ContractError when a mask does not match the operand shapes.
Tensor decoder_layer_forward(const Tensor& y, const Tensor& e, const AttentionMask& mask_self,
                             const AttentionMask& mask_cross, const DecoderLayerParams& params,
                             std::size_t n_heads, ActivationTrace* trace = nullptr);

/// Embeds (ids, flags) and runs every decoder layer; returns the last
/// layer's output [len x d_model].
Tensor decoder_forward(std::span<const TokenId> ids, std::span<const std::uint8_t> flags,
                       const EncoderOutput& encoded, const AttentionMask& mask_self,
                       const ModelConfig& config, const ModelParams& params,
                       ActivationTrace* trace = nullptr);

/// [len x d_model] -> [len x (V + 2)]. Columns [0, V) are token logits,
/// column V the memory-flag logit and column V + 1 the target-flag logit.
Tensor project_output(const Tensor& d_out, const ModelParams& params);

}  // namespace wmt
