#include "wmt/analysis/rake.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "wmt/tokenizer.hpp"

namespace wmt::analysis {

namespace {

bool has_alnum(std::string_view s) {
    return std::any_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; });
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace

std::string ScoredKeyword::phrase() const {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += words[i];
    }
    return out;
}

RakeResult rake_analyze(std::string_view text, const Stoplist& stoplist) {
    std::vector<std::vector<std::string>> occurrences;
    std::vector<std::string> run;
    for (const std::string& token : split_words(lowercase(text))) {
        if (!has_alnum(token) || stoplist.contains(token)) {
            if (!run.empty()) {
                occurrences.push_back(std::move(run));
                run.clear();
            }
            continue;
        }
        run.push_back(token);
    }
    if (!run.empty()) {
        occurrences.push_back(std::move(run));
    }

    RakeResult result;
    std::map<std::string, std::size_t> word_index;
    for (const auto& phrase : occurrences) {
        for (const std::string& w : phrase) {
            auto [it, inserted] = word_index.emplace(w, result.words.size());
            if (inserted) {
                result.words.push_back({w, 0.0, 0.0, 0.0});
            }
            RakeWordScore& s = result.words[it->second];
            s.degree += static_cast<double>(phrase.size());
            s.frequency += 1.0;
        }
    }
    for (RakeWordScore& s : result.words) {
        s.score = s.degree / s.frequency;
    }

    std::map<std::vector<std::string>, bool> seen;
    for (const auto& phrase : occurrences) {
        if (!seen.emplace(phrase, true).second) {
            continue;
        }
        ScoredKeyword k{phrase, 0.0};
        for (const std::string& w : phrase) {
            k.score += result.words[word_index.at(w)].score;
        }
        result.candidates.push_back(std::move(k));
    }

    const std::size_t top = (result.words.size() + 2) / 3;
    std::vector<std::size_t> order(result.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return result.candidates[a].score > result.candidates[b].score;
    });
    for (std::size_t i = 0; i < std::min(top, order.size()); ++i) {
        result.keywords.push_back(result.candidates[order[i]]);
    }
    return result;
}

std::vector<ScoredKeyword> rake_extract(std::string_view text, const Stoplist& stoplist) {
    return rake_analyze(text, stoplist).keywords;
}

}  // namespace wmt::analysis
