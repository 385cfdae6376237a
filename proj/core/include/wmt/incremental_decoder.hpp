#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wmt/model.hpp"

namespace wmt {

/// Autoregressive decoder driven one position at a time.
class StepDecoder {
public:
    virtual ~StepDecoder() = default;

    /// Width of every logit row (V + 2).
    virtual std::size_t output_width() const = 0;

    /// Appends (token, flag) at the next position and returns its logit row.
    /// `allowed[s]` says whether this position may attend position s; it
    /// has one entry per position fed so far, including this one.
    virtual std::vector<double> step(TokenId token, std::uint8_t flag,
                                     std::span<const std::uint8_t> allowed) = 0;

    /// Number of positions fed so far.
    virtual std::size_t position() const = 0;
};

/// Key/value-cached decoder over fixed parameters. Evaluates exactly the
/// same function as decoder_forward + project_output row by row, without
/// recording on the tape.
class CachedDecoder final : public StepDecoder {
public:
    /// `config`, `params` and `encoded` must outlive the decoder.
    CachedDecoder(const ModelConfig& config, const ModelParams& params, const EncoderOutput& encoded);

    std::size_t output_width() const override { return config_.output_width(); }
    std::vector<double> step(TokenId token, std::uint8_t flag,
                             std::span<const std::uint8_t> allowed) override;
    std::size_t position() const override { return position_; }

private:
    struct LayerCache {
        std::vector<double> self_keys;     // [position x d]
        std::vector<double> self_values;   // [position x d]
        std::vector<double> cross_keys;    // [src_len x d]
        std::vector<double> cross_values;  // [src_len x d]
    };

    const ModelConfig& config_;
    const ModelParams& params_;
    std::vector<std::uint8_t> src_allowed_;
    std::size_t src_len_ = 0;
    std::vector<LayerCache> caches_;
    std::size_t position_ = 0;
};

}  // namespace wmt
