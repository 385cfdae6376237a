#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wmt/analysis/stoplist.hpp"

namespace wmt::analysis {

struct ScoredKeyword {
    std::vector<std::string> words;
    double score = 0.0;

    std::string phrase() const;
};

struct RakeWordScore {
    std::string word;
    /// Sum of the lengths of the candidate phrases containing the word,
    /// once per occurrence.
    double degree = 0.0;
    double frequency = 0.0;
    double score = 0.0;
};

struct RakeResult {
    /// Distinct candidate phrases in order of first occurrence.
    std::vector<ScoredKeyword> candidates;
    /// Distinct words in order of first occurrence.
    std::vector<RakeWordScore> words;
    /// Top ceil(|words| / 3) candidates, score-descending, ties by first
    /// occurrence.
    std::vector<ScoredKeyword> keywords;
};

/// Candidates are maximal runs of lowercased non-stopwords; stopwords and
/// pure-punctuation tokens split runs.
RakeResult rake_analyze(std::string_view text, const Stoplist& stoplist);
std::vector<ScoredKeyword> rake_extract(std::string_view text, const Stoplist& stoplist);

}  // namespace wmt::analysis
