#include "wmt/analysis/stoplist.hpp"

#include <fstream>

#include "wmt/error.hpp"

namespace wmt::analysis {

namespace {

constexpr std::string_view kEnglish[] = {
    "a", "about", "above", "after", "again", "against", "all", "along", "also", "am", "among",
    "an", "and", "another", "any", "anyone", "anything", "are", "around", "as", "at", "be",
    "because", "been", "before", "being", "below", "beside", "besides", "between", "beyond",
    "both", "but", "by", "can", "could", "despite", "did", "do", "does", "doing", "down",
    "during", "each", "either", "else", "ever", "every", "everyone", "everything", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "however", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "least", "less", "many", "may", "me", "might", "more", "most", "much",
    "must", "my", "myself", "neither", "no", "nobody", "nor", "not", "nothing", "now", "of",
    "off", "often", "on", "once", "only", "onto", "or", "other", "others", "ought", "our",
    "ours", "ourselves", "out", "over", "own", "per", "rather", "same", "shall", "she",
    "should", "since", "so", "some", "someone", "something", "somewhat", "such", "than", "that",
    "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "though", "through", "thus", "to", "too", "toward", "under", "unless", "until",
    "up", "upon", "us", "very", "via", "was", "we", "were", "what", "whatever", "when",
    "whenever", "where", "whereas", "whereby", "wherever", "whether", "which", "while", "who",
    "whoever", "whom", "whose", "why", "will", "with", "within", "without", "would", "yet",
    "you", "your", "yours", "yourself", "yourselves",
};

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

}  // namespace

Stoplist::Stoplist(std::span<const std::string> words) {
    for (const std::string& w : words) {
        words_.insert(lowercase(w));
    }
}

const Stoplist& Stoplist::english() {
    static const Stoplist list = [] {
        std::vector<std::string> words(std::begin(kEnglish), std::end(kEnglish));
        return Stoplist(words);
    }();
    return list;
}

Stoplist Stoplist::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open stoplist " + path.string());
    }
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        const auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') {
            continue;
        }
        words.push_back(line.substr(start));
    }
    return Stoplist(words);
}

bool Stoplist::contains(std::string_view word) const {
    return words_.find(lowercase(word)) != words_.end();
}

std::uint64_t Stoplist::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const std::string& w : words_) {
        for (char c : w) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        h ^= static_cast<unsigned char>('\n');
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace wmt::analysis
