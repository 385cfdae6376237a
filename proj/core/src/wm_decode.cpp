#include "wmt/wm_decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "wmt/error.hpp"
#include "wmt/ops.hpp"

namespace wmt {

namespace {

std::vector<double> softmax_row(std::span<const double> logits) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - max_logit);
        total += p[i];
    }
    for (double& v : p) {
        v /= total;
    }
    return p;
}

void check_p(double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw ContractError("nucleus p must lie in (0, 1], got " + std::to_string(p));
    }
}

void check_row(std::span<const double> row) {
    if (row.size() < 3) {
        throw DimensionError("logit row of width " + std::to_string(row.size()) +
                             " cannot hold tokens plus two flag units");
    }
}

std::vector<std::uint8_t> mask_row(std::span<const std::uint8_t> flags, bool ablate) {
    std::vector<std::uint8_t> row(flags.size(), 1);
    if (ablate) {
        for (std::size_t s = 0; s < flags.size(); ++s) {
            row[s] = flags[s] == kTargetFlag ? 1 : 0;
        }
    }
    return row;
}

/// Sorted ids and their probabilities, truncated to the nucleus.
std::pair<std::vector<TokenId>, std::vector<double>> nucleus(std::span<const double> logits, double p) {
    check_p(p);
    if (logits.empty()) {
        throw DimensionError("nucleus over an empty logit row");
    }
    const std::vector<double> probs = softmax_row(logits);
    std::vector<TokenId> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](TokenId a, TokenId b) { return probs[a] > probs[b]; });
    std::size_t keep = order.size();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        cumulative += probs[order[i]];
        // Slack for softmax roundoff, so a prefix holding exactly p counts.
        if (cumulative >= p - 1e-12) {
            keep = i + 1;
            break;
        }
    }
    order.resize(keep);
    std::vector<double> kept(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        kept[i] = probs[order[i]];
    }
    return {order, kept};
}

}  // namespace

void RoutedSequence::check_invariants(std::size_t mem_size) const {
    if (tokens.size() != flags.size()) {
        throw ContractError("routed sequence has " + std::to_string(tokens.size()) + " tokens but " +
                            std::to_string(flags.size()) + " flags");
    }
    if (flags.empty() || flags.front() != kTargetFlag) {
        throw ContractError("routed sequence must start with a target-flagged token");
    }
    std::size_t zeros = 0;
    for (std::size_t t = 0; t < flags.size(); ++t) {
        if (flags[t] > 1) {
            throw ContractError("flag at position " + std::to_string(t) + " is not 0 or 1");
        }
        if (flags[t] == kMemoryFlag && ++zeros > mem_size) {
            throw ContractError("memory exceeds " + std::to_string(mem_size) + " slots at position " +
                                std::to_string(t));
        }
    }
    if (zeros != memory_count) {
        throw ContractError("memory_count " + std::to_string(memory_count) + " but " +
                            std::to_string(zeros) + " zero flags");
    }
}

AttentionMask make_look_ahead_mask(std::size_t len) {
    if (len == 0) {
        throw ContractError("make_look_ahead_mask: len must be >= 1");
    }
    AttentionMask m{len, len, std::vector<std::uint8_t>(len * len, 0)};
    for (std::size_t q = 0; q < len; ++q) {
        for (std::size_t k = 0; k <= q; ++k) {
            m.allowed[q * len + k] = 1;
        }
    }
    return m;
}

AttentionMask make_memory_ablation_mask(std::span<const std::uint8_t> flags) {
    AttentionMask m = make_look_ahead_mask(flags.size());
    for (std::size_t q = 0; q < flags.size(); ++q) {
        for (std::size_t k = 0; k <= q; ++k) {
            if (flags[k] == kMemoryFlag) {
                m.allowed[q * flags.size() + k] = 0;
            }
        }
    }
    return m;
}

std::vector<TokenId> nucleus_support(std::span<const double> token_logits, double p) {
    return nucleus(token_logits, p).first;
}

std::vector<double> nucleus_distribution(std::span<const double> token_logits, double p) {
    const auto [ids, probs] = nucleus(token_logits, p);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    std::vector<double> dist(token_logits.size(), 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        dist[static_cast<std::size_t>(ids[i])] = probs[i] / total;
    }
    return dist;
}

TokenId nucleus_sample(std::span<const double> token_logits, double p, Rng& rng) {
    const auto [ids, probs] = nucleus(token_logits, p);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    const double u = uniform_unit(rng) * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) {
            return ids[i];
        }
    }
    return ids.back();
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) {
        throw DimensionError("argmax of an empty row");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

DecodeStep select_flag_and_token(std::span<const double> logit_row, Rng& rng, double p_nucleus) {
    check_row(logit_row);
    const std::size_t v = logit_row.size() - 2;
    DecodeStep step;
    step.token_logits.assign(logit_row.begin(), logit_row.begin() + static_cast<std::ptrdiff_t>(v));
    step.flag0_logit = logit_row[v];
    step.flag1_logit = logit_row[v + 1];
    step.flag = step.flag1_logit > step.flag0_logit ? kTargetFlag : kMemoryFlag;
    if (step.flag == kTargetFlag) {
        step.token = static_cast<TokenId>(argmax(step.token_logits));
    } else {
        step.token = nucleus_sample(step.token_logits, p_nucleus, rng);
    }
    return step;
}

RoutingResult route_teacher_forced(StepDecoder& decoder, std::span<const TokenId> y_real,
                                   std::size_t mem_size, double p_nucleus, Rng& rng,
                                   std::size_t max_len) {
    if (y_real.size() < 2 || y_real.front() != kStartId || y_real.back() != kEndId) {
        throw InputError("target sequence must start with <s>, end with </s> and hold >= 2 ids");
    }
    const std::size_t total = y_real.size() + mem_size;
    if (total > max_len) {
        throw InputError("target length " + std::to_string(y_real.size()) + " plus memory " +
                         std::to_string(mem_size) + " exceeds max_len " + std::to_string(max_len));
    }
    RoutingResult result;
    RoutedSequence& seq = result.routed;
    seq.tokens.reserve(total);
    seq.flags.reserve(total);
    seq.tokens.push_back(y_real.front());
    seq.flags.push_back(kTargetFlag);
    std::size_t i = 0;
    while (seq.tokens.size() < total) {
        const std::vector<std::uint8_t> row(seq.tokens.size(), 1);
        const std::vector<double> logits = decoder.step(seq.tokens.back(), seq.flags.back(), row);
        DecodeStep step = select_flag_and_token(logits, rng, p_nucleus);
        if (step.flag == kMemoryFlag && seq.memory_count == mem_size) {
            step.flag = kTargetFlag;
            step.forced = true;
        } else if (step.flag == kTargetFlag && i + 1 == y_real.size()) {
            // Targets are used up but memory is not full yet.
            step.flag = kMemoryFlag;
            step.forced = true;
            step.token = nucleus_sample(step.token_logits, p_nucleus, rng);
        }
        if (step.flag == kMemoryFlag) {
            ++seq.memory_count;
        } else {
            ++i;
            step.token = y_real[i];
        }
        seq.tokens.push_back(step.token);
        seq.flags.push_back(step.flag);
        result.steps.push_back(std::move(step));
    }
    return result;
}

TrainingForward training_forward_pass(const EncoderOutput& encoded, std::span<const TokenId> y_real,
                                      const ModelConfig& config, const ModelParams& params,
                                      Rng& rng) {
    TrainingForward out;
    {
        NoGradScope no_grad;
        CachedDecoder decoder(config, params, encoded);
        RoutingResult routing = route_teacher_forced(decoder, y_real, config.mem_size,
                                                     config.p_nucleus, rng, config.max_len);
        out.routed = std::move(routing.routed);
        out.steps = std::move(routing.steps);
    }
    const std::size_t rows = out.routed.tokens.size() - 1;
    const std::span<const TokenId> inputs(out.routed.tokens.data(), rows);
    const std::span<const std::uint8_t> input_flags(out.routed.flags.data(), rows);
    const Tensor d_out = decoder_forward(inputs, input_flags, encoded, make_look_ahead_mask(rows),
                                         config, params);
    out.logits = project_output(d_out, params);
    out.loss_mask.resize(rows);
    for (std::size_t t = 0; t < rows; ++t) {
        out.loss_mask[t] = out.routed.flags[t + 1] == kTargetFlag ? 1 : 0;
    }
    return out;
}

RoutedSequence generate_routed(StepDecoder& decoder, std::size_t mem_size, double p_nucleus,
                               Rng& rng, std::size_t max_len, bool ablate_memory,
                               std::vector<DecodeStep>* steps) {
    RoutedSequence seq;
    seq.tokens.push_back(kStartId);
    seq.flags.push_back(kTargetFlag);
    while (seq.tokens.size() < max_len) {
        const std::vector<std::uint8_t> row = mask_row(seq.flags, ablate_memory);
        const std::vector<double> logits = decoder.step(seq.tokens.back(), seq.flags.back(), row);
        DecodeStep step = select_flag_and_token(logits, rng, p_nucleus);
        if (step.flag == kMemoryFlag && seq.memory_count == mem_size) {
            step.flag = kTargetFlag;
            step.forced = true;
            step.token = static_cast<TokenId>(argmax(step.token_logits));
        }
        if (step.flag == kMemoryFlag) {
            ++seq.memory_count;
        }
        seq.tokens.push_back(step.token);
        seq.flags.push_back(step.flag);
        const bool done = step.flag == kTargetFlag && step.token == kEndId;
        if (steps != nullptr) {
            steps->push_back(std::move(step));
        }
        if (done) {
            break;
        }
    }
    return seq;
}

RoutedSequence generate(const EncoderOutput& encoded, const ModelConfig& config,
                        const ModelParams& params, Rng& rng, bool ablate_memory,
                        std::vector<DecodeStep>* steps) {
    NoGradScope no_grad;
    CachedDecoder decoder(config, params, encoded);
    return generate_routed(decoder, config.mem_size, config.p_nucleus, rng, config.max_len,
                           ablate_memory, steps);
}

std::pair<std::vector<TokenId>, std::vector<TokenId>> split_routed(const RoutedSequence& seq) {
    if (seq.tokens.size() != seq.flags.size()) {
        throw ContractError("split_routed: token and flag counts differ");
    }
    std::pair<std::vector<TokenId>, std::vector<TokenId>> parts;
    for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
        (seq.flags[t] == kTargetFlag ? parts.first : parts.second).push_back(seq.tokens[t]);
    }
    return parts;
}

RoutedSequence merge_routed(std::span<const TokenId> targets, std::span<const TokenId> memory,
                            std::span<const std::uint8_t> flags) {
    RoutedSequence seq;
    std::size_t ti = 0;
    std::size_t mi = 0;
    for (std::uint8_t f : flags) {
        if (f == kTargetFlag) {
            if (ti == targets.size()) {
                throw ContractError("merge_routed: more target flags than target tokens");
            }
            seq.tokens.push_back(targets[ti++]);
        } else {
            if (mi == memory.size()) {
                throw ContractError("merge_routed: more memory flags than memory tokens");
            }
            seq.tokens.push_back(memory[mi++]);
            ++seq.memory_count;
        }
        seq.flags.push_back(f);
    }
    if (ti != targets.size() || mi != memory.size()) {
        throw ContractError("merge_routed: flags do not consume every token");
    }
    return seq;
}

void write_decode_trace(std::ostream& out, std::span<const DecodeStep> steps) {
    for (std::size_t t = 0; t < steps.size(); ++t) {
        nlohmann::ordered_json j;
        j["position"] = t + 1;
        j["token"] = steps[t].token;
        j["flag"] = steps[t].flag;
        j["flag_logits"] = {steps[t].flag0_logit, steps[t].flag1_logit};
        j["token_logits"] = steps[t].token_logits;
        j["forced"] = steps[t].forced;
        out << j.dump() << '\n';
    }
}

}  // namespace wmt
