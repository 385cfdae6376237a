#include <gtest/gtest.h>

#include <cmath>

#include "wmt/error.hpp"
#include "wmt/metrics.hpp"

using namespace wmt;

namespace {

using Lines = std::vector<std::string>;

double meteor_one(const std::string& hyp, const std::string& ref) {
    const auto h = metric_tokens(hyp);
    const auto r = metric_tokens(ref);
    return meteor_lite_sentence(h, r).score;
}

}  // namespace

TEST(Bleu, IdenticalCorpusScoresHundred) {
    const Lines s = {"the cat sat on the mat", "a dog runs"};
    EXPECT_NEAR(bleu4(s, s), 100.0, 1e-9);
}

TEST(Bleu, NoUnigramMatchScoresZero) {
    EXPECT_EQ(bleu4(Lines{"x y z"}, Lines{"a b c"}), 0.0);
}

TEST(Bleu, BrevityPenaltyOnly) {
    EXPECT_NEAR(bleu4(Lines{"the cat sat"}, Lines{"the cat sat down"}), 100.0 * std::exp(-1.0 / 3),
                1e-9);
}

// Every higher order has zero matches, so each uses (0 + 1) / (total + 1).
TEST(Bleu, AddOneForEmptyOrders) {
    const double expected = 100.0 * std::pow(1.0 / 4 * 1.0 / 4 * 1.0 / 3 * 1.0 / 2, 0.25);
    EXPECT_NEAR(bleu4(Lines{"the the the the"}, Lines{"the cat"}), expected, 1e-9);
}

// Cross-checked against nltk corpus_bleu and sacrebleu (tokenize=none).
TEST(Bleu, MatchesReferenceImplementations) {
    const Lines hyp = {"the cat sat on the mat", "a dog runs fast today"};
    const Lines ref = {"the cat sat on a mat", "a dog runs very fast today"};
    EXPECT_NEAR(bleu4(hyp, ref), 43.59242208658585, 1e-9);
}

TEST(Bleu, CaseAndPunctuationNormalized) {
    EXPECT_NEAR(bleu4(Lines{"The cat, sat."}, Lines{"the cat , sat ."}), 100.0, 1e-9);
}

TEST(Bleu, InputErrors) {
    EXPECT_THROW(bleu4(Lines{}, Lines{}), InputError);
    EXPECT_THROW(bleu4(Lines{"a"}, Lines{"a", "b"}), InputError);
}

TEST(SuffixStem, StripsLongestListedSuffixKeepingThreeLetters) {
    EXPECT_EQ(suffix_stem("cats"), "cat");
    EXPECT_EQ(suffix_stem("Running"), "runn");
    EXPECT_EQ(suffix_stem("quickly"), "quick");
    EXPECT_EQ(suffix_stem("is"), "is");
    EXPECT_EQ(suffix_stem("bus"), "bus");
}

TEST(MeteorLite, IdenticalSentenceCarriesOneChunkPenalty) {
    // One chunk over three matches: penalty 0.5 / 27.
    EXPECT_NEAR(meteor_one("the cat sat", "the cat sat"), 1.0 - 0.5 / 27, 1e-12);
}

TEST(MeteorLite, StemMatchHandCase) {
    // sat matches exactly, cats matches cat by stem; P = R = 2/3, one chunk.
    const auto h = metric_tokens("cats sat quietly");
    const auto r = metric_tokens("the cat sat");
    const MeteorAlignment a = meteor_lite_sentence(h, r);
    EXPECT_EQ(a.matches, 2u);
    EXPECT_EQ(a.chunks, 1u);
    EXPECT_NEAR(a.precision, 2.0 / 3, 1e-12);
    EXPECT_NEAR(a.recall, 2.0 / 3, 1e-12);
    EXPECT_NEAR(a.f_mean, 2.0 / 3, 1e-12);
    EXPECT_NEAR(a.score, 2.0 / 3 * (1 - 0.5 / 8), 1e-12);
}

TEST(MeteorLite, FragmentationRaisesPenalty) {
    // Reversed order: three matches in three chunks.
    const auto a = meteor_lite_sentence(metric_tokens("c b a"), metric_tokens("a b c"));
    EXPECT_EQ(a.chunks, 3u);
    EXPECT_NEAR(a.penalty, 0.5, 1e-12);
    EXPECT_NEAR(a.score, 0.5, 1e-12);
}

TEST(MeteorLite, EmptyOrDisjointScoresZero) {
    EXPECT_EQ(meteor_one("", "a b"), 0.0);
    EXPECT_EQ(meteor_one("x y", "a b"), 0.0);
}

TEST(MeteorLite, CorpusIsMeanSentenceScoreInPercent) {
    const Lines hyp = {"the cat sat", "c b a"};
    const Lines ref = {"the cat sat", "a b c"};
    EXPECT_NEAR(meteor_lite(hyp, ref), 100.0 * ((1.0 - 0.5 / 27) + 0.5) / 2, 1e-9);
    const ScorePair s = score_corpus(hyp, ref);
    EXPECT_EQ(s.n_samples, 2u);
    EXPECT_NEAR(s.meteor_lite, meteor_lite(hyp, ref), 1e-12);
    EXPECT_NEAR(s.bleu4, bleu4(hyp, ref), 1e-12);
}
