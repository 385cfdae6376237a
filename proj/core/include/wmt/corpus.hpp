#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmt {

class Vocabulary;

struct ParallelPair {
    std::string source;
    std::string reference;
    std::string tag;
    /// Gold part-of-speech tags for the reference words, when known.
    std::vector<std::string> reference_pos;

    friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

enum class CorpusFormat { tsv, jsonl };

/// Picks the format from the file extension (.jsonl/.json -> jsonl, else tsv).
CorpusFormat format_from_path(const std::filesystem::path& path);

/// Order-preserving load; blank lines are skipped. Malformed rows raise
/// InputError naming the line.
std::vector<ParallelPair> load_parallel(const std::filesystem::path& path, CorpusFormat format,
                                        std::string_view tag = {});
void save_parallel(const std::filesystem::path& path, std::span<const ParallelPair> pairs,
                   CorpusFormat format);

using LengthFn = std::function<std::size_t(std::string_view)>;

/// Whitespace/punctuation word count (split_words).
std::size_t word_count(std::string_view text);

/// Keeps pairs whose reference length lies in [lo, hi].
std::vector<ParallelPair> filter_by_length_bounds(std::span<const ParallelPair> pairs,
                                                  std::size_t lo, std::size_t hi,
                                                  const LengthFn& length = word_count);
std::vector<ParallelPair> filter_by_length_bounds(std::span<const ParallelPair> pairs,
                                                  std::size_t lo, std::size_t hi,
                                                  const Vocabulary& tokenizer);

/// Drops repeated (source, reference) pairs, keeping the first occurrence.
std::vector<ParallelPair> dedup(std::span<const ParallelPair> pairs);

struct LengthSummary {
    std::size_t min = 0;
    std::size_t max = 0;
    double average = 0.0;
};

struct CorpusStats {
    std::size_t samples = 0;
    LengthSummary source;
    LengthSummary reference;
};

CorpusStats corpus_stats(std::span<const ParallelPair> pairs, const LengthFn& length = word_count);
LengthSummary length_summary(std::span<const std::string> texts, const LengthFn& length = word_count);

}  // namespace wmt
