#include "wmt/analysis/memory.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>

#include "wmt/analysis/rake.hpp"
#include "wmt/error.hpp"
#include "wmt/tokenizer.hpp"

namespace wmt::analysis {

namespace {

std::string_view trim(std::string_view s) {
    const auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string fold(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool is_piece(std::string_view s) {
    return s.size() > kContinuationMarker.size() &&
           s.substr(s.size() - kContinuationMarker.size()) == kContinuationMarker;
}

MemoryWord make_word(std::string surface, bool complete) {
    MemoryWord w;
    w.key = fold(surface);
    w.surface = std::move(surface);
    w.complete = complete;
    return w;
}

void check_capacity(const PredictionRecord& record, std::size_t count, std::size_t mem_size) {
    if (count > mem_size) {
        throw InputError("record tagged '" + record.tag + "' holds " + std::to_string(count) +
                         " unique memory tokens, more than M=" + std::to_string(mem_size));
    }
}

ProbabilityWithCI count_hits(std::span<const PredictionRecord> records, auto&& predicate) {
    std::size_t hits = 0;
    for (const PredictionRecord& r : records) {
        if (predicate(r)) {
            ++hits;
        }
    }
    return wilson_interval(hits, records.size());
}

DiversityTrend fit_points(std::map<double, std::pair<double, std::size_t>> groups) {
    DiversityTrend trend;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [x, acc] : groups) {
        const double mean = acc.first / static_cast<double>(acc.second);
        trend.points.push_back({x, mean, acc.second});
        xs.push_back(x);
        ys.push_back(mean);
    }
    if (xs.size() >= 2) {
        trend.fit = least_squares(xs, ys);
    } else if (!ys.empty()) {
        trend.fit.intercept = ys.front();
    }
    return trend;
}

}  // namespace

std::vector<MemoryWord> memory_words(std::span<const std::string> memory) {
    std::vector<MemoryWord> words;
    std::string pending;
    for (const std::string& raw : memory) {
        const std::string_view token = trim(raw);
        if (token.empty()) {
            continue;
        }
        if (is_piece(token)) {
            pending.append(token.substr(0, token.size() - kContinuationMarker.size()));
            continue;
        }
        pending.append(token);
        words.push_back(make_word(std::move(pending), true));
        pending.clear();
    }
    if (!pending.empty()) {
        words.push_back(make_word(pending + std::string(kContinuationMarker), false));
    }
    return words;
}

std::vector<MemoryWord> unique_memory_words(const PredictionRecord& record) {
    std::vector<MemoryWord> unique;
    std::set<std::string, std::less<>> seen;
    for (MemoryWord& w : memory_words(record.memory)) {
        if (seen.insert(w.key).second) {
            unique.push_back(std::move(w));
        }
    }
    return unique;
}

std::size_t unique_memory_tokens(const PredictionRecord& record) {
    return unique_memory_words(record).size();
}

DiversityStats diversity_histogram(std::span<const PredictionRecord> records,
                                   std::size_t mem_size) {
    DiversityStats stats;
    stats.histogram.assign(mem_size + 1, 0);
    double total = 0.0;
    for (const PredictionRecord& r : records) {
        const std::size_t count = unique_memory_tokens(r);
        check_capacity(r, count, mem_size);
        stats.counts.push_back(count);
        ++stats.histogram[count];
        total += static_cast<double>(count);
    }
    if (!records.empty()) {
        stats.mean = total / static_cast<double>(records.size());
    }
    return stats;
}

DiversityTrend epoch_diversity_trend(std::span<const PredictionRecord> records) {
    std::map<double, std::pair<double, std::size_t>> groups;
    for (const PredictionRecord& r : records) {
        auto& acc = groups[static_cast<double>(r.epoch)];
        acc.first += static_cast<double>(unique_memory_tokens(r));
        ++acc.second;
    }
    if (groups.size() < 2) {
        throw InputError("epoch_diversity_trend: need records from at least two epochs");
    }
    return fit_points(std::move(groups));
}

DiversityTrend diversity_by_length(std::span<const PredictionRecord> records) {
    if (records.empty()) {
        throw InputError("diversity_by_length: no records");
    }
    std::map<double, std::pair<double, std::size_t>> groups;
    for (const PredictionRecord& r : records) {
        const std::size_t length = split_words(r.prediction).size();
        const double bucket =
            static_cast<double>(length / kLengthBucketWidth * kLengthBucketWidth);
        auto& acc = groups[bucket];
        acc.first += static_cast<double>(unique_memory_tokens(r));
        ++acc.second;
    }
    return fit_points(std::move(groups));
}

std::string_view keyword_source_name(KeywordSource source) {
    return source == KeywordSource::predictions ? "predictions" : "references";
}

bool keyword_in_memory(const PredictionRecord& record, KeywordSource source,
                       const Stoplist& stoplist) {
    if (source == KeywordSource::references && record.reference.empty()) {
        throw InputError("record tagged '" + record.tag + "' has no reference text");
    }
    const std::string& text =
        source == KeywordSource::predictions ? record.prediction : record.reference;
    std::set<std::string, std::less<>> memory;
    for (const MemoryWord& w : memory_words(record.memory)) {
        if (w.complete) {
            memory.insert(w.key);
        }
    }
    if (memory.empty()) {
        return false;
    }
    for (const ScoredKeyword& k : rake_extract(text, stoplist)) {
        for (const std::string& word : k.words) {
            if (memory.contains(word)) {
                return true;
            }
        }
    }
    return false;
}

ProbabilityWithCI keyword_in_memory_probability(std::span<const PredictionRecord> records,
                                                KeywordSource source, const Stoplist& stoplist) {
    return count_hits(records, [&](const PredictionRecord& r) {
        return keyword_in_memory(r, source, stoplist);
    });
}

bool is_content_word(const MemoryWord& word, const Stoplist& stoplist) {
    if (!word.complete || word.key.size() < 2) {
        return false;
    }
    const bool alphabetic = std::all_of(word.key.begin(), word.key.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) != 0;
    });
    return alphabetic && !stoplist.contains(word.key);
}

bool has_content_word(const PredictionRecord& record, const Stoplist& stoplist) {
    const std::vector<MemoryWord> words = memory_words(record.memory);
    return std::any_of(words.begin(), words.end(),
                       [&](const MemoryWord& w) { return is_content_word(w, stoplist); });
}

ProbabilityWithCI content_word_probability(std::span<const PredictionRecord> records,
                                           const Stoplist& stoplist) {
    return count_hits(records,
                      [&](const PredictionRecord& r) { return has_content_word(r, stoplist); });
}

PosTag memory_word_tag(const MemoryWord& word) {
    return word.complete ? pos_tag(word.surface, false) : PosTag::OTHER;
}

PosDistribution pos_distribution(std::span<const PredictionRecord> records,
                                 std::size_t mem_size) {
    PosDistribution dist;
    for (auto& bins : dist.counts) {
        bins.assign(mem_size + 1, 0);
    }
    for (const PredictionRecord& r : records) {
        const std::vector<MemoryWord> unique = unique_memory_words(r);
        check_capacity(r, unique.size(), mem_size);
        std::array<std::size_t, kAllPosTags.size()> per_tag{};
        for (const MemoryWord& w : unique) {
            ++per_tag[static_cast<std::size_t>(memory_word_tag(w))];
        }
        for (std::size_t t = 0; t < per_tag.size(); ++t) {
            ++dist.counts[t][per_tag[t]];
        }
    }
    return dist;
}

}  // namespace wmt::analysis
