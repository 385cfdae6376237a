#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmt/analysis/pos.hpp"
#include "wmt/analysis/stats.hpp"
#include "wmt/analysis/stoplist.hpp"
#include "wmt/prediction.hpp"

namespace wmt::analysis {

struct MemoryWord {
    /// Case-folded, trimmed form used for identity.
    std::string key;
    /// Trimmed form of the first occurrence, used for tagging.
    std::string surface;
    /// False for a subword piece that never found its continuation.
    bool complete = true;
};

/// Trims and merges `@@` continuation pieces into words, in order. A piece
/// still ending in `@@` at the end of memory is kept as an incomplete word.
/// Empty tokens are dropped.
std::vector<MemoryWord> memory_words(std::span<const std::string> memory);

/// Distinct memory words, first-occurrence order.
std::vector<MemoryWord> unique_memory_words(const PredictionRecord& record);
std::size_t unique_memory_tokens(const PredictionRecord& record);

struct DiversityStats {
    std::vector<std::size_t> counts;
    /// Bins 0..mem_size.
    std::vector<std::size_t> histogram;
    double mean = 0.0;
};

/// Throws InputError when a record holds more than mem_size unique tokens.
DiversityStats diversity_histogram(std::span<const PredictionRecord> records,
                                   std::size_t mem_size);

struct TrendPoint {
    double x = 0.0;
    double mean = 0.0;
    std::size_t n = 0;
};

struct DiversityTrend {
    std::vector<TrendPoint> points;
    LinearFit fit;
};

/// Mean diversity per distinct epoch, ascending, with an OLS fit of mean on
/// epoch. Throws InputError for fewer than two distinct epochs.
DiversityTrend epoch_diversity_trend(std::span<const PredictionRecord> records);

inline constexpr std::size_t kLengthBucketWidth = 5;

/// Mean diversity per prediction-length bucket (length in words, buckets of
/// kLengthBucketWidth, x = bucket lower bound) with an OLS fit over the
/// bucket means. A single bucket yields slope 0 with fit.defined false.
/// Throws InputError for no records.
DiversityTrend diversity_by_length(std::span<const PredictionRecord> records);

enum class KeywordSource { predictions, references };

std::string_view keyword_source_name(KeywordSource source);

/// A record hits when any word of any RAKE keyword of the chosen text equals
/// a complete memory word. Throws InputError when references are requested
/// and a record has none.
bool keyword_in_memory(const PredictionRecord& record, KeywordSource source,
                       const Stoplist& stoplist);
ProbabilityWithCI keyword_in_memory_probability(std::span<const PredictionRecord> records,
                                                KeywordSource source, const Stoplist& stoplist);

/// Alphabetic, at least two characters, not a stopword.
bool is_content_word(const MemoryWord& word, const Stoplist& stoplist);
bool has_content_word(const PredictionRecord& record, const Stoplist& stoplist);
ProbabilityWithCI content_word_probability(std::span<const PredictionRecord> records,
                                           const Stoplist& stoplist);

/// Incomplete pieces are OTHER; complete words go through pos_tag as
/// non-initial words.
PosTag memory_word_tag(const MemoryWord& word);

/// counts[tag][k] = number of records whose unique memory words include
/// exactly k words tagged `tag`, for k in 0..mem_size.
struct PosDistribution {
    std::array<std::vector<std::size_t>, kAllPosTags.size()> counts;
};

/// Throws InputError when a record holds more than mem_size unique tokens.
PosDistribution pos_distribution(std::span<const PredictionRecord> records,
                                 std::size_t mem_size);

}  // namespace wmt::analysis
