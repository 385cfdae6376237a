#include "wmt/incremental_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wmt/error.hpp"

namespace wmt {

namespace {

using Row = std::vector<double>;

/// out = x W + b for a single row.
Row affine(std::span<const double> x, const LinearParams& p) {
    const std::size_t in = p.weight.rows();
    const std::size_t out = p.weight.cols();
    const auto w = p.weight.values();
    Row y(p.bias.values().begin(), p.bias.values().end());
    for (std::size_t i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) {
            continue;
        }
        const double* wrow = w.data() + i * out;
        for (std::size_t j = 0; j < out; ++j) {
            y[j] += xi * wrow[j];
        }
    }
    return y;
}

/// Rows of `x` [n x in] mapped through p, flattened [n x out].
Row affine_rows(std::span<const double> x, std::size_t n, const LinearParams& p) {
    const std::size_t in = p.weight.rows();
    Row out;
    out.reserve(n * p.weight.cols());
    for (std::size_t r = 0; r < n; ++r) {
        const Row y = affine(x.subspan(r * in, in), p);
        out.insert(out.end(), y.begin(), y.end());
    }
    return out;
}

void layer_norm_inplace(Row& x, const LayerNormParams& p) {
    const std::size_t n = x.size();
    double mu = 0.0;
    for (double v : x) {
        mu += v;
    }
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) {
        const double d = v - mu;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    const auto g = p.gamma.values();
    const auto b = p.beta.values();
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = g[j] * ((x[j] - mu) * inv) + b[j];
    }
}

/// Attention of one query row over cached keys/values; masked keys get
/// exactly zero weight, matching the -1e9 bias of the taped path.
Row attend(const Row& q, const Row& keys, const Row& values, std::size_t n_keys,
           std::span<const std::uint8_t> allowed, std::size_t n_heads, const LinearParams& out) {
    const std::size_t d = q.size();
    const std::size_t dh = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    Row concat(d, 0.0);
    Row scores(n_keys);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t lo = h * dh;
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < n_keys; ++s) {
            double dot = 0.0;
            for (std::size_t j = 0; j < dh; ++j) {
                dot += q[lo + j] * keys[s * d + lo + j];
            }
            scores[s] = dot * inv_sqrt + (allowed[s] != 0 ? 0.0 : -1e9);
            max_score = std::max(max_score, scores[s]);
        }
        double total = 0.0;
        for (std::size_t s = 0; s < n_keys; ++s) {
            scores[s] = std::exp(scores[s] - max_score);
            total += scores[s];
        }
        for (std::size_t s = 0; s < n_keys; ++s) {
            const double w = scores[s] / total;
            if (w == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < dh; ++j) {
                concat[lo + j] += w * values[s * d + lo + j];
            }
        }
    }
    return affine(concat, out);
}

void add_inplace(Row& x, const Row& y) {
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] += y[j];
    }
}

}  // namespace

CachedDecoder::CachedDecoder(const ModelConfig& config, const ModelParams& params,
                             const EncoderOutput& encoded)
    : config_(config), params_(params), src_len_(encoded.activation.rows()) {
    if (encoded.activation.cols() != config.d_model) {
        throw DimensionError("CachedDecoder: encoder width " +
                             std::to_string(encoded.activation.cols()) + " != d_model " +
                             std::to_string(config.d_model));
    }
    src_allowed_.resize(src_len_);
    for (std::size_t s = 0; s < src_len_; ++s) {
        src_allowed_[s] = encoded.src_ids.size() == src_len_ && encoded.src_ids[s] == kPadId ? 0 : 1;
    }
    const auto e = encoded.activation.values();
    caches_.resize(params.decoder.size());
    for (std::size_t l = 0; l < params.decoder.size(); ++l) {
        caches_[l].cross_keys = affine_rows(e, src_len_, params.decoder[l].cross_attention.key);
        caches_[l].cross_values = affine_rows(e, src_len_, params.decoder[l].cross_attention.value);
    }
}

std::vector<double> CachedDecoder::step(TokenId token, std::uint8_t flag,
                                        std::span<const std::uint8_t> allowed) {
    const std::size_t t = position_;
    const std::size_t d = config_.d_model;
    if (t >= config_.max_len) {
        throw InputError("decoder position " + std::to_string(t) + " reaches max_len " +
                         std::to_string(config_.max_len));
    }
    if (allowed.size() != t + 1) {
        throw ContractError("CachedDecoder::step: mask row has " + std::to_string(allowed.size()) +
                            " entries at position " + std::to_string(t));
    }
    if (flag > 1) {
        throw ContractError("CachedDecoder::step: flag " + std::to_string(flag) + " is not 0 or 1");
    }
    if (token < 0 || static_cast<std::size_t>(token) >= params_.tgt_embedding.rows()) {
        throw InputError("CachedDecoder::step: token id " + std::to_string(token) +
                         " outside the vocabulary");
    }

    const auto emb = params_.tgt_embedding.values();
    const auto flags = params_.flag_table.values();
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    Row x(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
        const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
        const double pe = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        x[i] = emb[static_cast<std::size_t>(token) * d + i] * sqrt_d + flags[flag * d + i] + pe;
    }

    for (std::size_t l = 0; l < params_.decoder.size(); ++l) {
        const DecoderLayerParams& layer = params_.decoder[l];
        LayerCache& cache = caches_[l];
        const Row q = affine(x, layer.self_attention.query);
        const Row k = affine(x, layer.self_attention.key);
        const Row v = affine(x, layer.self_attention.value);
        cache.self_keys.insert(cache.self_keys.end(), k.begin(), k.end());
        cache.self_values.insert(cache.self_values.end(), v.begin(), v.end());
        Row a_self = x;
        add_inplace(a_self, attend(q, cache.self_keys, cache.self_values, t + 1, allowed,
                                   config_.n_heads, layer.self_attention.output));
        layer_norm_inplace(a_self, layer.norm_self);

        const Row qc = affine(a_self, layer.cross_attention.query);
        Row a_cross = a_self;
        add_inplace(a_cross, attend(qc, cache.cross_keys, cache.cross_values, src_len_,
                                    src_allowed_, config_.n_heads, layer.cross_attention.output));
        layer_norm_inplace(a_cross, layer.norm_cross);

        Row hidden = affine(a_cross, layer.feed_forward.inner);
        for (double& h : hidden) {
            h = std::max(h, 0.0);
        }
        Row out = a_cross;
        add_inplace(out, affine(hidden, layer.feed_forward.outer));
        layer_norm_inplace(out, layer.norm_out);
        x = std::move(out);
    }
    ++position_;
    Row logits = affine(x, params_.output);
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw NumericError("CachedDecoder::step: non-finite logit at position " +
                               std::to_string(t));
        }
    }
    return logits;
}

}  // namespace wmt
