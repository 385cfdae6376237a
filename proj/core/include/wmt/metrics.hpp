#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmt {

struct ScorePair {
    double bleu4 = 0.0;
    /// Exact + stem matching only; not comparable to full METEOR.
    double meteor_lite = 0.0;
    std::size_t n_samples = 0;
};

/// Shared normalization for both metrics: lowercase, then split_words.
std::vector<std::string> metric_tokens(std::string_view text);

/// Corpus BLEU-4 in percent. Modified n-gram precisions are pooled over the
/// corpus; an order with zero matches uses (0 + 1) / (total + 1); a corpus
/// without any unigram match scores 0. Brevity penalty exp(1 - r/c) when
/// the hypotheses are shorter than the references.
/// Throws InputError for an empty corpus or mismatched list lengths.
double bleu4(std::span<const std::string> hypotheses, std::span<const std::string> references);
double bleu4_tokens(std::span<const std::vector<std::string>> hypotheses,
                    std::span<const std::vector<std::string>> references);

/// Crude suffix stripper used by the stem stage of meteor_lite.
std::string suffix_stem(std::string_view word);

struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_mean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

/// Greedy left-to-right unigram alignment: exact matches first, then equal
/// stems among the leftovers. F = 10PR / (R + 9P), penalty
/// 0.5 * (chunks / matches)^3, score = F * (1 - penalty).
MeteorAlignment meteor_lite_sentence(std::span<const std::string> hypothesis,
                                     std::span<const std::string> reference);

/// Mean sentence score in percent. Same errors as bleu4.
double meteor_lite(std::span<const std::string> hypotheses, std::span<const std::string> references);

ScorePair score_corpus(std::span<const std::string> hypotheses,
                       std::span<const std::string> references);

}  // namespace wmt
