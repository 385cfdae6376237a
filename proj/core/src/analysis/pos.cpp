#include "wmt/analysis/pos.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "wmt/error.hpp"

namespace wmt::analysis {

namespace {

const std::unordered_map<std::string_view, PosTag>& lexicon() {
    static const std::unordered_map<std::string_view, PosTag> table = [] {
        std::unordered_map<std::string_view, PosTag> t;
        for (auto w : {"the", "a", "an", "this", "that", "these", "those", "every", "each", "some",
                       "any", "no", "another", "either", "neither"}) {
            t.emplace(w, PosTag::DET);
        }
        for (auto w : {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
                       "them", "my", "your", "his", "its", "our", "their", "mine", "yours", "ours",
                       "theirs", "myself", "yourself", "himself", "herself", "itself", "ourselves",
                       "themselves", "who", "whom", "whose", "what", "which", "someone",
                       "something", "anyone", "anything", "everyone", "everything", "nobody",
                       "nothing"}) {
            t.emplace(w, PosTag::PRON);
        }
        for (auto w : {"and", "but", "or", "nor", "yet", "so"}) {
            t.emplace(w, PosTag::CCONJ);
        }
        for (auto w : {"of", "in", "on", "at", "to", "from", "with", "by", "for", "about", "under",
                       "over", "into", "onto", "after", "before", "through", "between", "up",
                       "down", "off", "out", "back", "around", "among", "along", "against",
                       "without", "within", "during", "since", "until", "upon", "via", "above",
                       "below", "behind", "near", "across", "toward", "towards"}) {
            t.emplace(w, PosTag::ADP);
        }
        for (auto w : {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
                       "nine", "ten", "hundred", "thousand"}) {
            t.emplace(w, PosTag::NUM);
        }
        for (auto w : {"is", "are", "was", "were", "am", "be", "been", "being", "has", "have",
                       "had", "do", "does", "did", "will", "would", "can", "could", "shall",
                       "should", "may", "might", "must"}) {
            t.emplace(w, PosTag::VERB);
        }
        for (auto w : {"because", "not", "if", "than", "as", "when", "while", "although",
                       "though", "whether", "then", "there", "here", "very", "too", "also"}) {
            t.emplace(w, PosTag::OTHER);
        }
        return t;
    }();
    return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

struct SuffixRule {
    std::string_view suffix;
    std::size_t min_length;
    PosTag tag;
};

// Checked in order; min_length guards short nouns such as "fish" or "table".
constexpr SuffixRule kSuffixRules[] = {
    {"ly", 5, PosTag::ADV},     {"ing", 5, PosTag::VERB},   {"ed", 4, PosTag::VERB},
    {"ous", 5, PosTag::ADJ},    {"ful", 5, PosTag::ADJ},    {"able", 7, PosTag::ADJ},
    {"ible", 7, PosTag::ADJ},   {"ive", 5, PosTag::ADJ},    {"less", 6, PosTag::ADJ},
    {"ish", 6, PosTag::ADJ},    {"al", 5, PosTag::ADJ},     {"ic", 5, PosTag::ADJ},
};

}  // namespace

std::string_view pos_name(PosTag tag) {
    switch (tag) {
        case PosTag::DET: return "DET";
        case PosTag::NOUN: return "NOUN";
        case PosTag::PROPN: return "PROPN";
        case PosTag::VERB: return "VERB";
        case PosTag::PRON: return "PRON";
        case PosTag::CCONJ: return "CCONJ";
        case PosTag::PUNCT: return "PUNCT";
        case PosTag::ADJ: return "ADJ";
        case PosTag::ADV: return "ADV";
        case PosTag::ADP: return "ADP";
        case PosTag::NUM: return "NUM";
        case PosTag::OTHER: return "OTHER";
    }
    return "OTHER";
}

PosTag parse_pos(std::string_view name) {
    for (PosTag t : kAllPosTags) {
        if (pos_name(t) == name) {
            return t;
        }
    }
    throw InputError("unknown POS tag '" + std::string(name) + "'");
}

PosTag pos_tag(std::string_view word, bool sentence_initial) {
    if (word.empty()) {
        return PosTag::OTHER;
    }
    if (word.size() > 2 && word.front() == '<' && word.back() == '>') {
        return PosTag::OTHER;
    }
    const bool any_alnum = std::any_of(word.begin(), word.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0;
    });
    if (!any_alnum) {
        return PosTag::PUNCT;
    }
    std::string lower(word);
    for (char& c : lower) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (const auto it = lexicon().find(lower); it != lexicon().end()) {
        return it->second;
    }
    const bool numeric = std::all_of(word.begin(), word.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '.' || c == ',';
    });
    if (numeric) {
        return PosTag::NUM;
    }
    const bool capitalized = std::isupper(static_cast<unsigned char>(word.front())) != 0;
    const bool all_caps = word.size() > 1 && std::none_of(word.begin(), word.end(), [](char c) {
        return std::islower(static_cast<unsigned char>(c)) != 0;
    });
    if (all_caps || (capitalized && !sentence_initial)) {
        return PosTag::PROPN;
    }
    for (const SuffixRule& rule : kSuffixRules) {
        if (lower.size() >= rule.min_length && ends_with(lower, rule.suffix)) {
            return rule.tag;
        }
    }
    return PosTag::NOUN;
}

std::vector<PosTag> pos_tag_sentence(std::span<const std::string> words) {
    std::vector<PosTag> tags;
    tags.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        tags.push_back(pos_tag(words[i], i == 0));
    }
    return tags;
}

}  // namespace wmt::analysis
