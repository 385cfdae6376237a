#include "wmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <utility>

#include <json.hpp>

#include "wmt/error.hpp"
#include "wmt/tokenizer.hpp"

namespace wmt {

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

ParallelPair parse_tsv_row(const std::string& line, std::size_t line_no, const std::string& origin) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
        throw InputError(origin + ":" + std::to_string(line_no) +
                         ": row has one column, expected source<TAB>target");
    }
    if (line.find('\t', tab + 1) != std::string::npos) {
        throw InputError(origin + ":" + std::to_string(line_no) + ": row has more than two columns");
    }
    ParallelPair pair;
    pair.source = line.substr(0, tab);
    pair.reference = line.substr(tab + 1);
    if (is_blank(pair.source) || is_blank(pair.reference)) {
        throw InputError(origin + ":" + std::to_string(line_no) + ": empty source or target");
    }
    return pair;
}

ParallelPair parse_jsonl_row(const std::string& line, std::size_t line_no, const std::string& origin) {
    nlohmann::json row;
    try {
        row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(origin + ":" + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    if (!row.is_object() || !row.contains("src") || !row.contains("tgt") ||
        !row["src"].is_string() || !row["tgt"].is_string()) {
        throw InputError(origin + ":" + std::to_string(line_no) +
                         ": expected an object with string fields src and tgt");
    }
    ParallelPair pair;
    pair.source = row["src"].get<std::string>();
    pair.reference = row["tgt"].get<std::string>();
    if (is_blank(pair.source) || is_blank(pair.reference)) {
        throw InputError(origin + ":" + std::to_string(line_no) + ": empty source or target");
    }
    if (row.contains("pos")) {
        if (!row["pos"].is_array()) {
            throw InputError(origin + ":" + std::to_string(line_no) + ": pos must be a list");
        }
        for (const auto& tag : row["pos"]) {
            if (!tag.is_string()) {
                throw InputError(origin + ":" + std::to_string(line_no) + ": pos entries must be strings");
            }
            pair.reference_pos.push_back(tag.get<std::string>());
        }
    }
    return pair;
}

}  // namespace

CorpusFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".jsonl" || ext == ".json" ? CorpusFormat::jsonl : CorpusFormat::tsv;
}

std::vector<ParallelPair> load_parallel(const std::filesystem::path& path, CorpusFormat format,
                                        std::string_view tag) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open corpus " + path.string());
    }
    const std::string origin = path.string();
    std::vector<ParallelPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (is_blank(line)) {
            continue;
        }
        ParallelPair pair = format == CorpusFormat::tsv ? parse_tsv_row(line, line_no, origin)
                                                        : parse_jsonl_row(line, line_no, origin);
        pair.tag = std::string(tag);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void save_parallel(const std::filesystem::path& path, std::span<const ParallelPair> pairs,
                   CorpusFormat format) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write corpus " + path.string());
    }
    for (const ParallelPair& p : pairs) {
        if (format == CorpusFormat::tsv) {
            if (p.source.find_first_of("\t\n") != std::string::npos ||
                p.reference.find_first_of("\t\n") != std::string::npos) {
                throw InputError("TSV fields must not contain tabs or newlines");
            }
            out << p.source << '\t' << p.reference << '\n';
            continue;
        }
        nlohmann::ordered_json row;
        row["src"] = p.source;
        row["tgt"] = p.reference;
        if (!p.reference_pos.empty()) {
            row["pos"] = p.reference_pos;
        }
        out << row.dump() << '\n';
    }
}

std::size_t word_count(std::string_view text) {
    return split_words(text).size();
}

std::vector<ParallelPair> filter_by_length_bounds(std::span<const ParallelPair> pairs,
                                                  std::size_t lo, std::size_t hi,
                                                  const LengthFn& length) {
    if (lo > hi) {
        throw ContractError("filter_by_length_bounds: lo > hi");
    }
    std::vector<ParallelPair> kept;
    for (const ParallelPair& p : pairs) {
        const std::size_t n = length(p.reference);
        if (n >= lo && n <= hi) {
            kept.push_back(p);
        }
    }
    return kept;
}

std::vector<ParallelPair> filter_by_length_bounds(std::span<const ParallelPair> pairs,
                                                  std::size_t lo, std::size_t hi,
                                                  const Vocabulary& tokenizer) {
    return filter_by_length_bounds(pairs, lo, hi, [&tokenizer](std::string_view text) {
        return tokenizer.encode(text).size();
    });
}

std::vector<ParallelPair> dedup(std::span<const ParallelPair> pairs) {
    std::set<std::pair<std::string_view, std::string_view>> seen;
    std::vector<ParallelPair> kept;
    for (const ParallelPair& p : pairs) {
        if (seen.emplace(p.source, p.reference).second) {
            kept.push_back(p);
        }
    }
    return kept;
}

LengthSummary length_summary(std::span<const std::string> texts, const LengthFn& length) {
    LengthSummary s;
    if (texts.empty()) {
        return s;
    }
    s.min = std::numeric_limits<std::size_t>::max();
    double total = 0.0;
    for (const std::string& t : texts) {
        const std::size_t n = length(t);
        s.min = std::min(s.min, n);
        s.max = std::max(s.max, n);
        total += static_cast<double>(n);
    }
    s.average = total / static_cast<double>(texts.size());
    return s;
}

CorpusStats corpus_stats(std::span<const ParallelPair> pairs, const LengthFn& length) {
    std::vector<std::string> sources;
    std::vector<std::string> references;
    for (const ParallelPair& p : pairs) {
        sources.push_back(p.source);
        references.push_back(p.reference);
    }
    CorpusStats stats;
    stats.samples = pairs.size();
    stats.source = length_summary(sources, length);
    stats.reference = length_summary(references, length);
    return stats;
}

}  // namespace wmt
