#include "wmt/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "wmt/error.hpp"
#include "wmt/tokenizer.hpp"

namespace wmt {

namespace {

void check_corpus(std::size_t hyps, std::size_t refs) {
    if (hyps == 0) {
        throw InputError("cannot score an empty corpus");
    }
    if (hyps != refs) {
        throw InputError("hypothesis count " + std::to_string(hyps) +
                         " differs from reference count " + std::to_string(refs));
    }
}

std::vector<std::vector<std::string>> tokenize_all(std::span<const std::string> texts) {
    std::vector<std::vector<std::string>> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) {
        out.push_back(metric_tokens(t));
    }
    return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> words, std::size_t n) {
    NgramCounts counts;
    if (words.size() < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
        ++counts[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                          words.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
    std::string lowered(text);
    for (char& c : lowered) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return split_words(lowered);
}

double bleu4_tokens(std::span<const std::vector<std::string>> hypotheses,
                    std::span<const std::vector<std::string>> references) {
    check_corpus(hypotheses.size(), references.size());
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto& h = hypotheses[s];
        const auto& r = references[s];
        hyp_len += h.size();
        ref_len += r.size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const NgramCounts hc = count_ngrams(h, n);
            const NgramCounts rc = count_ngrams(r, n);
            for (const auto& [gram, count] : hc) {
                const auto it = rc.find(gram);
                if (it != rc.end()) {
                    matches[n - 1] += std::min(count, it->second);
                }
                totals[n - 1] += count;
            }
        }
    }
    if (matches[0] == 0) {
        return 0.0;
    }
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        double precision = 0.0;
        if (matches[n] == 0) {
            precision = 1.0 / static_cast<double>(totals[n] + 1);
        } else {
            precision = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
        }
        log_sum += std::log(precision);
    }
    double bp = 1.0;
    if (hyp_len < ref_len) {
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    }
    return 100.0 * bp * std::exp(log_sum / 4.0);
}

double bleu4(std::span<const std::string> hypotheses, std::span<const std::string> references) {
    check_corpus(hypotheses.size(), references.size());
    const auto h = tokenize_all(hypotheses);
    const auto r = tokenize_all(references);
    return bleu4_tokens(h, r);
}

std::string suffix_stem(std::string_view word) {
    static constexpr std::array<std::string_view, 9> kSuffixes = {
        "ingly", "edly", "ing", "est", "ed", "es", "er", "ly", "s"};
    std::string w(word);
    for (char& c : w) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    for (std::string_view suffix : kSuffixes) {
        if (ends_with(w, suffix) && w.size() - suffix.size() >= 3) {
            return w.substr(0, w.size() - suffix.size());
        }
    }
    return w;
}

MeteorAlignment meteor_lite_sentence(std::span<const std::string> hypothesis,
                                     std::span<const std::string> reference) {
    MeteorAlignment a;
    if (hypothesis.empty() || reference.empty()) {
        return a;
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> link(hypothesis.size(), kNone);
    std::vector<bool> used(reference.size(), false);
    for (std::size_t i = 0; i < hypothesis.size(); ++i) {
        for (std::size_t j = 0; j < reference.size(); ++j) {
            if (!used[j] && hypothesis[i] == reference[j]) {
                link[i] = j;
                used[j] = true;
                break;
            }
        }
    }
    std::vector<std::string> ref_stems(reference.size());
    for (std::size_t j = 0; j < reference.size(); ++j) {
        ref_stems[j] = suffix_stem(reference[j]);
    }
    for (std::size_t i = 0; i < hypothesis.size(); ++i) {
        if (link[i] != kNone) {
            continue;
        }
        const std::string stem = suffix_stem(hypothesis[i]);
        for (std::size_t j = 0; j < reference.size(); ++j) {
            if (!used[j] && stem == ref_stems[j]) {
                link[i] = j;
                used[j] = true;
                break;
            }
        }
    }
    std::size_t prev = kNone;
    bool prev_linked = false;
    for (std::size_t i = 0; i < hypothesis.size(); ++i) {
        if (link[i] == kNone) {
            prev_linked = false;
            continue;
        }
        ++a.matches;
        if (!prev_linked || link[i] != prev + 1) {
            ++a.chunks;
        }
        prev = link[i];
        prev_linked = true;
    }
    if (a.matches == 0) {
        return a;
    }
    const double m = static_cast<double>(a.matches);
    a.precision = m / static_cast<double>(hypothesis.size());
    a.recall = m / static_cast<double>(reference.size());
    a.f_mean = 10.0 * a.precision * a.recall / (a.recall + 9.0 * a.precision);
    const double frag = static_cast<double>(a.chunks) / m;
    a.penalty = 0.5 * frag * frag * frag;
    a.score = a.f_mean * (1.0 - a.penalty);
    return a;
}

double meteor_lite(std::span<const std::string> hypotheses, std::span<const std::string> references) {
    check_corpus(hypotheses.size(), references.size());
    double total = 0.0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto h = metric_tokens(hypotheses[s]);
        const auto r = metric_tokens(references[s]);
        total += meteor_lite_sentence(h, r).score;
    }
    return 100.0 * total / static_cast<double>(hypotheses.size());
}

ScorePair score_corpus(std::span<const std::string> hypotheses,
                       std::span<const std::string> references) {
    return {bleu4(hypotheses, references), meteor_lite(hypotheses, references), hypotheses.size()};
}

}  // namespace wmt
