#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wmt/corpus.hpp"

namespace wmt {

class KeyValueConfig;

/// Knobs of one synthetic complexity tier. Tiers 1..4 stand in for corpora
/// of increasing translation difficulty: plain lowercase speech, informal
/// dialogue, pronoun-ambiguity schemas, and technical documentation.
///
/// Target sentences are English-like with gold POS tags; sources are a
/// rule-based rendering into an SOV pseudo-language without articles.
struct TierGrammar {
    int tier = 1;

    // Lexicon sizes (prefixes of fixed master word lists).
    std::size_t nouns = 24;
    std::size_t verbs = 14;
    std::size_t adjectives = 6;
    std::size_t adverbs = 0;
    std::size_t names = 0;
    std::size_t tech_nouns = 0;
    std::size_t tech_verbs = 0;
    std::size_t tech_adjectives = 0;
    std::size_t abbreviations = 0;
    std::size_t phrasal_verbs = 0;
    std::size_t pronouns = 4;
    std::size_t prepositions = 2;

    /// Zipf exponent for word choice inside each lexical class.
    double zipf_exponent = 1.1;

    std::size_t max_extra_clauses = 0;
    double conjunction_rate = 0.0;
    double adjective_rate = 0.25;
    double adverb_rate = 0.0;
    double phrasal_rate = 0.0;
    double pp_rate = 0.25;
    double pronoun_rate = 0.35;
    double name_rate = 0.0;
    /// Probability of a trailing "because <pronoun> was <adj>" clause whose
    /// pronoun is ambiguous in the source language.
    double ambiguity_rate = 0.0;
    double tech_rate = 0.0;
    double number_rate = 0.0;
    double abbreviation_rate = 0.0;
    double indefinite_rate = 0.0;
    bool lowercase = true;
    std::vector<std::string> end_punctuation = {"."};
};

/// Shipped defaults for tiers 1..4. Throws InputError for other tiers.
TierGrammar default_grammar(int tier);

/// Defaults for `tier`, overridden by any matching keys in `config`.
TierGrammar grammar_from_config(const KeyValueConfig& config, int tier);

/// Deterministic given (tier, n, seed). Throws InputError for unknown tiers
/// and ContractError for n == 0.
std::vector<ParallelPair> generate_synthetic_tier(int tier, std::size_t n, std::uint64_t seed);
std::vector<ParallelPair> generate_synthetic(const TierGrammar& grammar, std::size_t n,
                                             std::uint64_t seed);

/// Every target word the grammar can emit, lowercased, with its gold tag.
std::map<std::string, std::string> tier_lexicon(const TierGrammar& grammar);

/// Type-token ratio over the reference side.
double type_token_ratio(std::span<const ParallelPair> pairs);

}  // namespace wmt
