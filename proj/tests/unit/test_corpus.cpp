#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "wmt/corpus.hpp"
#include "wmt/error.hpp"
#include "wmt/key_value.hpp"
#include "wmt/synthetic.hpp"
#include "wmt/tokenizer.hpp"

using namespace wmt;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "wmt_test_corpus";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << content;
    return p;
}

ParallelPair pair(std::string s, std::string r) {
    return {std::move(s), std::move(r), "", {}};
}

}  // namespace

TEST(LoadParallel, TsvInOrderWithBlankLines) {
    const auto p = temp_file("two.tsv", "a b\tx y\n\nc\tz\n");
    const auto pairs = load_parallel(p, CorpusFormat::tsv, "t");
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].source, "a b");
    EXPECT_EQ(pairs[0].reference, "x y");
    EXPECT_EQ(pairs[1].source, "c");
    EXPECT_EQ(pairs[1].tag, "t");
}

TEST(LoadParallel, MissingColumnNamesTheLine) {
    const auto p = temp_file("bad.tsv", "a\tb\nonly-one-column\n");
    try {
        load_parallel(p, CorpusFormat::tsv);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

TEST(LoadParallel, MalformedJsonNamesTheLine) {
    const auto p = temp_file("bad.jsonl", "{\"src\":\"a\",\"tgt\":\"b\"}\n{\"src\":1}\n");
    try {
        load_parallel(p, CorpusFormat::jsonl);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

TEST(LoadParallel, JsonlAndTsvEncodingsAgree) {
    const auto pairs = generate_synthetic_tier(3, 40, 2);
    const fs::path dir = fs::temp_directory_path() / "wmt_test_corpus";
    fs::create_directories(dir);
    save_parallel(dir / "dual.tsv", pairs, CorpusFormat::tsv);
    save_parallel(dir / "dual.jsonl", pairs, CorpusFormat::jsonl);
    auto from_tsv = load_parallel(dir / "dual.tsv", CorpusFormat::tsv);
    auto from_jsonl = load_parallel(dir / "dual.jsonl", CorpusFormat::jsonl);
    ASSERT_EQ(from_tsv.size(), from_jsonl.size());
    for (std::size_t i = 0; i < from_tsv.size(); ++i) {
        EXPECT_EQ(from_tsv[i].source, from_jsonl[i].source);
        EXPECT_EQ(from_tsv[i].reference, from_jsonl[i].reference);
        // Gold tags survive only in JSONL.
        EXPECT_EQ(from_jsonl[i].reference_pos, pairs[i].reference_pos);
    }
    EXPECT_EQ(format_from_path("x.jsonl"), CorpusFormat::jsonl);
    EXPECT_EQ(format_from_path("x.tsv"), CorpusFormat::tsv);
}

TEST(FilterByLength, IdentityEmptyAndIdempotent) {
    const auto pairs = generate_synthetic_tier(2, 300, 4);
    EXPECT_EQ(filter_by_length_bounds(pairs, 0, std::numeric_limits<std::size_t>::max()), pairs);
    EXPECT_TRUE(filter_by_length_bounds(pairs, 500, 600).empty());
    const auto once = filter_by_length_bounds(pairs, 6, 10);
    EXPECT_EQ(filter_by_length_bounds(once, 6, 10), once);
    for (const auto& p : once) {
        const std::size_t n = word_count(p.reference);
        EXPECT_GE(n, 6u);
        EXPECT_LE(n, 10u);
    }
    EXPECT_THROW(filter_by_length_bounds(pairs, 5, 4), ContractError);
}

TEST(FilterByLength, TokenizerLength) {
    const std::vector<ParallelPair> pairs = {pair("a", "x y z"), pair("b", "x")};
    const std::vector<std::string> refs = {"x y z", "x"};
    const auto v = Vocabulary::build(refs);
    const auto kept = filter_by_length_bounds(pairs, 2, 5, v);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].source, "a");
}

TEST(Dedup, KeepsFirstOccurrence) {
    const auto p = pair("a", "b");
    const auto q = pair("c", "d");
    EXPECT_EQ(dedup(std::vector<ParallelPair>{p, q}), (std::vector<ParallelPair>{p, q}));
    EXPECT_EQ(dedup(std::vector<ParallelPair>{p, p, q}), (std::vector<ParallelPair>{p, q}));
}

TEST(Dedup, ShuffledDuplicatesMatchSetSize) {
    auto pairs = generate_synthetic_tier(1, 200, 9);
    std::vector<ParallelPair> doubled = pairs;
    doubled.insert(doubled.end(), pairs.begin(), pairs.end());
    std::mt19937_64 rng(4);
    std::shuffle(doubled.begin(), doubled.end(), rng);
    std::set<std::pair<std::string, std::string>> distinct;
    for (const auto& p : doubled) {
        distinct.emplace(p.source, p.reference);
    }
    const auto unique = dedup(doubled);
    EXPECT_EQ(unique.size(), distinct.size());
}

TEST(CorpusStats, MinAverageMax) {
    const std::vector<ParallelPair> pairs = {pair("a b", "x"), pair("c", "x y z")};
    const CorpusStats s = corpus_stats(pairs);
    EXPECT_EQ(s.samples, 2u);
    EXPECT_EQ(s.reference.min, 1u);
    EXPECT_EQ(s.reference.max, 3u);
    EXPECT_DOUBLE_EQ(s.reference.average, 2.0);
    EXPECT_DOUBLE_EQ(s.source.average, 1.5);
}

TEST(Synthetic, DeterministicPerSeed) {
    EXPECT_EQ(generate_synthetic_tier(1, 3, 42), generate_synthetic_tier(1, 3, 42));
    EXPECT_NE(generate_synthetic_tier(1, 3, 42), generate_synthetic_tier(1, 3, 43));
}

TEST(Synthetic, UnknownTierAndZeroCount) {
    EXPECT_THROW(generate_synthetic_tier(0, 3, 1), InputError);
    EXPECT_THROW(generate_synthetic_tier(5, 3, 1), InputError);
    EXPECT_THROW(generate_synthetic_tier(1, 0, 1), ContractError);
}

TEST(Synthetic, TypeTokenRatioStrictlyIncreasesWithTier) {
    double previous = 0.0;
    for (int tier = 1; tier <= 4; ++tier) {
        const double ttr = type_token_ratio(generate_synthetic_tier(tier, 1000, 7));
        EXPECT_GT(ttr, previous) << "tier " << tier;
        previous = ttr;
    }
}

// Re-parse oracle: every target word is a lexicon word of its tier and
// carries that word's gold tag.
TEST(Synthetic, TargetsParseUnderTierLexicon) {
    for (int tier = 1; tier <= 4; ++tier) {
        const auto lexicon = tier_lexicon(default_grammar(tier));
        for (const auto& p : generate_synthetic_tier(tier, 300, 13)) {
            const auto words = split_words(p.reference);
            ASSERT_EQ(words.size(), p.reference_pos.size()) << p.reference;
            for (std::size_t i = 0; i < words.size(); ++i) {
                std::string lower = words[i];
                for (char& c : lower) {
                    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                }
                const auto it = lexicon.find(lower);
                ASSERT_NE(it, lexicon.end()) << "tier " << tier << ": " << words[i];
                EXPECT_EQ(it->second, p.reference_pos[i]) << words[i];
            }
            EXPECT_FALSE(p.source.empty());
            EXPECT_EQ(p.tag, "tier" + std::to_string(tier));
        }
    }
}

TEST(Synthetic, GrammarOverridesFromConfig) {
    const auto kv = KeyValueConfig::parse("nouns = 5\nadjective_rate = 0\n");
    const TierGrammar g = grammar_from_config(kv, 2);
    EXPECT_EQ(g.nouns, 5u);
    EXPECT_EQ(g.adjective_rate, 0.0);
    EXPECT_EQ(g.verbs, default_grammar(2).verbs);
    EXPECT_THROW(grammar_from_config(KeyValueConfig::parse("pp_rate = 1.5\n"), 1), InputError);
}

TEST(KeyValue, ParseOverrideAndTypedGetters) {
    const auto kv = KeyValueConfig::parse("# c\na = 1\nb=x y\n\na = 2\nflag = true\nr = 0.5\n");
    EXPECT_EQ(kv.get_int("a", 0), 2);
    EXPECT_EQ(kv.get_string("b", ""), "x y");
    EXPECT_TRUE(kv.get_bool("flag", false));
    EXPECT_DOUBLE_EQ(kv.get_double("r", 0.0), 0.5);
    EXPECT_EQ(kv.get_int("missing", 7), 7);
    EXPECT_THROW(kv.get_int("b", 0), InputError);
    EXPECT_THROW(KeyValueConfig::parse("no equals sign\n"), InputError);
}
