#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmt::analysis {

enum class PosTag { DET, NOUN, PROPN, VERB, PRON, CCONJ, PUNCT, ADJ, ADV, ADP, NUM, OTHER };

inline constexpr std::array<PosTag, 12> kAllPosTags = {
    PosTag::DET,   PosTag::NOUN, PosTag::PROPN, PosTag::VERB, PosTag::PRON, PosTag::CCONJ,
    PosTag::PUNCT, PosTag::ADJ,  PosTag::ADV,   PosTag::ADP,  PosTag::NUM,  PosTag::OTHER};

std::string_view pos_name(PosTag tag);
/// Throws InputError for an unknown name.
PosTag parse_pos(std::string_view name);

/// Rule tagger: closed-class lexicon, then capitalization (PROPN unless
/// sentence-initial, or all-caps), then suffixes (-ly ADV, -ed/-ing VERB,
/// adjective endings), else NOUN. Digits are NUM, punctuation-only PUNCT,
/// angle-bracketed specials OTHER.
PosTag pos_tag(std::string_view word, bool sentence_initial);

/// Tags every word of a sentence; the first word is sentence-initial.
std::vector<PosTag> pos_tag_sentence(std::span<const std::string> words);

}  // namespace wmt::analysis
