#include "wmt/model.hpp"

#include <cmath>
#include <cstdio>

#include "wmt/error.hpp"
#include "wmt/key_value.hpp"
#include "wmt/ops.hpp"

namespace wmt {

namespace {

constexpr double kMaskedBias = -1e9;

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw InputError("model config: " + message);
    }
}

Tensor uniform_tensor(Shape shape, double limit, Rng& rng) {
    Tensor t(std::move(shape), true);
    for (double& v : t.mutable_values()) {
        v = (2.0 * uniform_unit(rng) - 1.0) * limit;
    }
    return t;
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape), true);
    for (double& v : t.mutable_values()) {
        v = standard_normal(rng) * stddev;
    }
    return t;
}

Tensor filled(Shape shape, double value) {
    Tensor t(std::move(shape), true);
    for (double& v : t.mutable_values()) {
        v = value;
    }
    return t;
}

LinearParams make_linear(std::size_t in, std::size_t out, Rng* rng) {
    LinearParams p;
    if (rng != nullptr) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        p.weight = uniform_tensor({in, out}, limit, *rng);
    } else {
        p.weight = Tensor({in, out}, true);
    }
    p.bias = Tensor({out}, true);
    return p;
}

LayerNormParams make_norm(std::size_t width, bool zero) {
    return {filled({width}, zero ? 0.0 : 1.0), Tensor({width}, true)};
}

AttentionParams make_attention(std::size_t d, Rng* rng) {
    return {make_linear(d, d, rng), make_linear(d, d, rng), make_linear(d, d, rng),
            make_linear(d, d, rng)};
}

FeedForwardParams make_feed_forward(std::size_t d, std::size_t d_ff, Rng* rng) {
    return {make_linear(d, d_ff, rng), make_linear(d_ff, d, rng)};
}

ModelParams build_params(const ModelConfig& config, Rng* rng) {
    config.validate();
    const std::size_t d = config.d_model;
    const bool zero = rng == nullptr;
    ModelParams p;
    const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
    if (rng != nullptr) {
        p.src_embedding = normal_tensor({config.src_vocab_size, d}, emb_std, *rng);
        p.tgt_embedding = normal_tensor({config.tgt_vocab_size, d}, emb_std, *rng);
        p.flag_table = normal_tensor({2, d}, emb_std, *rng);
    } else {
        p.src_embedding = Tensor({config.src_vocab_size, d}, true);
        p.tgt_embedding = Tensor({config.tgt_vocab_size, d}, true);
        p.flag_table = Tensor({2, d}, true);
    }
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        EncoderLayerParams layer;
        layer.self_attention = make_attention(d, rng);
        layer.norm_attention = make_norm(d, zero);
        layer.feed_forward = make_feed_forward(d, config.d_ff, rng);
        layer.norm_feed_forward = make_norm(d, zero);
        p.encoder.push_back(std::move(layer));
    }
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        DecoderLayerParams layer;
        layer.self_attention = make_attention(d, rng);
        layer.norm_self = make_norm(d, zero);
        layer.cross_attention = make_attention(d, rng);
        layer.norm_cross = make_norm(d, zero);
        layer.feed_forward = make_feed_forward(d, config.d_ff, rng);
        layer.norm_out = make_norm(d, zero);
        p.decoder.push_back(std::move(layer));
    }
    p.output = make_linear(d, config.output_width(), rng);
    return p;
}

void append_linear(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                   const LinearParams& p) {
    out.emplace_back(prefix + ".weight", p.weight);
    out.emplace_back(prefix + ".bias", p.bias);
}

void append_norm(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                 const LayerNormParams& p) {
    out.emplace_back(prefix + ".gamma", p.gamma);
    out.emplace_back(prefix + ".beta", p.beta);
}

void append_attention(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                      const AttentionParams& p) {
    append_linear(out, prefix + ".query", p.query);
    append_linear(out, prefix + ".key", p.key);
    append_linear(out, prefix + ".value", p.value);
    append_linear(out, prefix + ".output", p.output);
}

void append_feed_forward(std::vector<std::pair<std::string, Tensor>>& out,
                         const std::string& prefix, const FeedForwardParams& p) {
    append_linear(out, prefix + ".inner", p.inner);
    append_linear(out, prefix + ".outer", p.outer);
}

Tensor copy_param(const Tensor& t) {
    Tensor c = t.detach();
    c.set_requires_grad(t.requires_grad());
    return c;
}

LinearParams clone_linear(const LinearParams& p) { return {copy_param(p.weight), copy_param(p.bias)}; }
LayerNormParams clone_norm(const LayerNormParams& p) { return {copy_param(p.gamma), copy_param(p.beta)}; }
AttentionParams clone_attention(const AttentionParams& p) {
    return {clone_linear(p.query), clone_linear(p.key), clone_linear(p.value), clone_linear(p.output)};
}
FeedForwardParams clone_feed_forward(const FeedForwardParams& p) {
    return {clone_linear(p.inner), clone_linear(p.outer)};
}

Tensor row_range(const Tensor& table, std::size_t len) {
    std::vector<TokenId> idx(len);
    for (std::size_t i = 0; i < len; ++i) {
        idx[i] = static_cast<TokenId>(i);
    }
    return gather_rows(table, idx);
}

Tensor feed_forward(const Tensor& x, const FeedForwardParams& p) {
    return linear(relu(linear(x, p.inner)), p.outer);
}

}  // namespace

void ModelConfig::validate() const {
    require(d_model > 0, "d_model must be positive");
    require(n_heads > 0, "n_heads must be positive");
    require(d_model % n_heads == 0, "d_model " + std::to_string(d_model) +
                                        " is not divisible by n_heads " + std::to_string(n_heads));
    require(n_layers > 0, "n_layers must be positive");
    require(d_ff > 0, "d_ff must be positive");
    require(src_vocab_size > kReservedCount, "src_vocab_size must exceed the reserved ids");
    require(tgt_vocab_size > kReservedCount, "tgt_vocab_size must exceed the reserved ids");
    require(p_nucleus > 0.0 && p_nucleus <= 1.0, "p_nucleus must lie in (0, 1]");
    require(max_len >= 2, "max_len must be at least 2");
}

KeyValueConfig ModelConfig::to_key_value() const {
    KeyValueConfig kv;
    kv.set("d_model", std::to_string(d_model));
    kv.set("n_layers", std::to_string(n_layers));
    kv.set("n_heads", std::to_string(n_heads));
    kv.set("d_ff", std::to_string(d_ff));
    kv.set("src_vocab_size", std::to_string(src_vocab_size));
    kv.set("tgt_vocab_size", std::to_string(tgt_vocab_size));
    kv.set("mem_size", std::to_string(mem_size));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", p_nucleus);
    kv.set("p_nucleus", buf);
    kv.set("max_len", std::to_string(max_len));
    kv.set("seed", std::to_string(seed));
    return kv;
}

ModelConfig ModelConfig::from_key_value(const KeyValueConfig& kv, const ModelConfig& base) {
    auto count = [&](std::string_view key, std::size_t fallback) {
        const long long v = kv.get_int(key, static_cast<long long>(fallback));
        if (v < 0) {
            throw InputError("model config: " + std::string(key) + " must be >= 0");
        }
        return static_cast<std::size_t>(v);
    };
    ModelConfig c = base;
    c.d_model = count("d_model", base.d_model);
    c.n_layers = count("n_layers", base.n_layers);
    c.n_heads = count("n_heads", base.n_heads);
    c.d_ff = count("d_ff", base.d_ff);
    c.src_vocab_size = count("src_vocab_size", base.src_vocab_size);
    c.tgt_vocab_size = count("tgt_vocab_size", base.tgt_vocab_size);
    c.mem_size = count("mem_size", base.mem_size);
    c.p_nucleus = kv.get_double("p_nucleus", base.p_nucleus);
    c.max_len = count("max_len", base.max_len);
    c.seed = static_cast<std::uint64_t>(count("seed", static_cast<std::size_t>(base.seed)));
    return c;
}

ModelConfig ModelConfig::from_key_value(const KeyValueConfig& kv) {
    return from_key_value(kv, ModelConfig{});
}

AttentionMask AttentionMask::full(std::size_t queries, std::size_t keys) {
    return {queries, keys, std::vector<std::uint8_t>(queries * keys, 1)};
}

Tensor AttentionMask::bias() const {
    Tensor t({queries, keys});
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < allowed.size(); ++i) {
        v[i] = allowed[i] != 0 ? 0.0 : kMaskedBias;
    }
    return t;
}

AttentionMask make_padding_mask(std::size_t queries, std::span<const TokenId> key_ids) {
    AttentionMask m{queries, key_ids.size(), {}};
    m.allowed.resize(queries * key_ids.size());
    for (std::size_t q = 0; q < queries; ++q) {
        for (std::size_t k = 0; k < key_ids.size(); ++k) {
            m.allowed[q * key_ids.size() + k] = key_ids[k] != kPadId ? 1 : 0;
        }
    }
    return m;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("src_embedding", src_embedding);
    out.emplace_back("tgt_embedding", tgt_embedding);
    out.emplace_back("flag_table", flag_table);
    for (std::size_t l = 0; l < encoder.size(); ++l) {
        const std::string prefix = "encoder." + std::to_string(l);
        append_attention(out, prefix + ".self_attention", encoder[l].self_attention);
        append_norm(out, prefix + ".norm_attention", encoder[l].norm_attention);
        append_feed_forward(out, prefix + ".feed_forward", encoder[l].feed_forward);
        append_norm(out, prefix + ".norm_feed_forward", encoder[l].norm_feed_forward);
    }
    for (std::size_t l = 0; l < decoder.size(); ++l) {
        const std::string prefix = "decoder." + std::to_string(l);
        append_attention(out, prefix + ".self_attention", decoder[l].self_attention);
        append_norm(out, prefix + ".norm_self", decoder[l].norm_self);
        append_attention(out, prefix + ".cross_attention", decoder[l].cross_attention);
        append_norm(out, prefix + ".norm_cross", decoder[l].norm_cross);
        append_feed_forward(out, prefix + ".feed_forward", decoder[l].feed_forward);
        append_norm(out, prefix + ".norm_out", decoder[l].norm_out);
    }
    append_linear(out, "output", output);
    return out;
}

std::vector<Tensor> ModelParams::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) {
        out.push_back(t);
    }
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named_parameters()) {
        n += t.size();
    }
    return n;
}

ModelParams ModelParams::clone() const {
    ModelParams c;
    c.src_embedding = copy_param(src_embedding);
    c.tgt_embedding = copy_param(tgt_embedding);
    c.flag_table = copy_param(flag_table);
    for (const auto& layer : encoder) {
        c.encoder.push_back({clone_attention(layer.self_attention), clone_norm(layer.norm_attention),
                             clone_feed_forward(layer.feed_forward),
                             clone_norm(layer.norm_feed_forward)});
    }
    for (const auto& layer : decoder) {
        c.decoder.push_back({clone_attention(layer.self_attention), clone_norm(layer.norm_self),
                             clone_attention(layer.cross_attention), clone_norm(layer.norm_cross),
                             clone_feed_forward(layer.feed_forward), clone_norm(layer.norm_out)});
    }
    c.output = clone_linear(output);
    return c;
}

ModelParams init_params(const ModelConfig& config, Rng& rng) { return build_params(config, &rng); }

ModelParams zero_params(const ModelConfig& config) { return build_params(config, nullptr); }

Tensor positional_encoding(std::size_t len, std::size_t d_model) {
    Tensor pe({len, d_model});
    auto v = pe.mutable_values();
    for (std::size_t pos = 0; pos < len; ++pos) {
        for (std::size_t i = 0; i < d_model; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            v[pos * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Tensor embed_tokens_with_flags(std::span<const TokenId> ids, std::span<const std::uint8_t> flags,
                               const Tensor& token_embedding, const Tensor& flag_table,
                               const Tensor& pos_table) {
    if (ids.size() != flags.size()) {
        throw DimensionError("embed_tokens_with_flags: " + std::to_string(ids.size()) + " ids but " +
                             std::to_string(flags.size()) + " flags");
    }
    if (pos_table.rows() < ids.size()) {
        throw DimensionError("embed_tokens_with_flags: positional table has " +
                             std::to_string(pos_table.rows()) + " rows for " +
                             std::to_string(ids.size()) + " tokens");
    }
    std::vector<TokenId> flag_ids(flags.size());
    for (std::size_t t = 0; t < flags.size(); ++t) {
        if (flags[t] > 1) {
            throw ContractError("embed_tokens_with_flags: flag " + std::to_string(flags[t]) +
                                " at position " + std::to_string(t) + " is not 0 or 1");
        }
        flag_ids[t] = flags[t];
    }
    const double scale_factor = std::sqrt(static_cast<double>(token_embedding.cols()));
    Tensor tokens = scale(gather_rows(token_embedding, ids), scale_factor);
    return add(add(tokens, gather_rows(flag_table, flag_ids)), row_range(pos_table, ids.size()));
}

Tensor linear(const Tensor& x, const LinearParams& p) {
    return add_row_vector(matmul(x, p.weight), p.bias);
}

Tensor multi_head_attention(const Tensor& queries, const Tensor& memory,
                            const AttentionParams& p, std::size_t n_heads,
                            const AttentionMask& mask) {
    if (mask.queries != queries.rows() || mask.keys != memory.rows() ||
        mask.allowed.size() != mask.queries * mask.keys) {
        throw ContractError("attention mask is " + std::to_string(mask.queries) + "x" +
                            std::to_string(mask.keys) + " for " + std::to_string(queries.rows()) +
                            " queries and " + std::to_string(memory.rows()) + " keys");
    }
    const std::size_t d = queries.cols();
    const std::size_t d_head = d / n_heads;
    const Tensor q = linear(queries, p.query);
    const Tensor k = linear(memory, p.key);
    const Tensor v = linear(memory, p.value);
    const Tensor bias = mask.bias();
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
    std::vector<Tensor> heads;
    heads.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t lo = h * d_head;
        const std::size_t hi = lo + d_head;
        const Tensor qh = slice_cols(q, lo, hi);
        const Tensor kh = slice_cols(k, lo, hi);
        const Tensor vh = slice_cols(v, lo, hi);
        const Tensor scores = add(scale(matmul(qh, transpose(kh)), inv_sqrt), bias);
        heads.push_back(matmul(softmax(scores, 1), vh));
    }
    return linear(n_heads == 1 ? heads.front() : concat_cols(heads), p.output);
}

EncoderOutput encoder_forward(std::span<const TokenId> src_ids, const ModelConfig& config,
                              const ModelParams& params) {
    if (src_ids.empty()) {
        throw InputError("encoder_forward: empty source sequence");
    }
    if (src_ids.size() > config.max_len) {
        throw InputError("encoder_forward: source length " + std::to_string(src_ids.size()) +
                         " exceeds max_len " + std::to_string(config.max_len));
    }
    for (TokenId id : src_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= params.src_embedding.rows()) {
            throw InputError("encoder_forward: source id " + std::to_string(id) +
                             " outside the vocabulary");
        }
    }
    const std::size_t len = src_ids.size();
    const double scale_factor = std::sqrt(static_cast<double>(config.d_model));
    Tensor x = add(scale(gather_rows(params.src_embedding, src_ids), scale_factor),
                   positional_encoding(len, config.d_model));
    const AttentionMask mask = make_padding_mask(len, src_ids);
    for (const EncoderLayerParams& layer : params.encoder) {
        const Tensor a = layer_norm(add(x, multi_head_attention(x, x, layer.self_attention,
                                                                config.n_heads, mask)),
                                    layer.norm_attention.gamma, layer.norm_attention.beta);
        x = layer_norm(add(a, feed_forward(a, layer.feed_forward)), layer.norm_feed_forward.gamma,
                       layer.norm_feed_forward.beta);
    }
    return {x, std::vector<TokenId>(src_ids.begin(), src_ids.end())};
}

Tensor decoder_layer_forward(const Tensor& y, const Tensor& e, const AttentionMask& mask_self,
                             const AttentionMask& mask_cross, const DecoderLayerParams& params,
                             std::size_t n_heads, ActivationTrace* trace) {
    if (y.cols() != e.cols()) {
        throw DimensionError("decoder_layer_forward: decoder width " + std::to_string(y.cols()) +
                             " differs from encoder width " + std::to_string(e.cols()));
    }
    const Tensor a_self =
        layer_norm(add(y, multi_head_attention(y, y, params.self_attention, n_heads, mask_self)),
                   params.norm_self.gamma, params.norm_self.beta);
    const Tensor a_cross = layer_norm(
        add(a_self, multi_head_attention(a_self, e, params.cross_attention, n_heads, mask_cross)),
        params.norm_cross.gamma, params.norm_cross.beta);
    Tensor d_out = layer_norm(add(a_cross, feed_forward(a_cross, params.feed_forward)),
                              params.norm_out.gamma, params.norm_out.beta);
    if (trace != nullptr) {
        trace->layers.push_back({a_self, a_cross, d_out});
    }
    return d_out;
}

Tensor decoder_forward(std::span<const TokenId> ids, std::span<const std::uint8_t> flags,
                       const EncoderOutput& encoded, const AttentionMask& mask_self,
                       const ModelConfig& config, const ModelParams& params,
                       ActivationTrace* trace) {
    if (ids.empty()) {
        throw InputError("decoder_forward: empty decoder input");
    }
    if (ids.size() > config.max_len) {
        throw InputError("decoder_forward: decoder length " + std::to_string(ids.size()) +
                         " exceeds max_len " + std::to_string(config.max_len));
    }
    for (TokenId id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= params.tgt_embedding.rows()) {
            throw InputError("decoder_forward: target id " + std::to_string(id) +
                             " outside the vocabulary");
        }
    }
    Tensor y = embed_tokens_with_flags(ids, flags, params.tgt_embedding, params.flag_table,
                                       positional_encoding(ids.size(), config.d_model));
    const AttentionMask mask_cross = make_padding_mask(ids.size(), encoded.src_ids);
    for (const DecoderLayerParams& layer : params.decoder) {
        y = decoder_layer_forward(y, encoded.activation, mask_self, mask_cross, layer,
                                  config.n_heads, trace);
    }
    return y;
}

Tensor project_output(const Tensor& d_out, const ModelParams& params) {
    return linear(d_out, params.output);
}

}  // namespace wmt
