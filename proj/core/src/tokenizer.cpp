#include "wmt/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "wmt/error.hpp"

namespace wmt {

namespace {

constexpr std::string_view kWordEnd = "</w>";
constexpr std::string_view kEdgePunctuation = ".,!?;:\"()[]{}";
const std::string kReservedNames[kReservedCount] = {"<pad>", "<s>", "</s>", "<unk>"};

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_edge_punct(char c) {
    return kEdgePunctuation.find(c) != std::string_view::npos;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// UTF-8 codepoints of a word; the last one carries the end-of-word tag.
std::vector<std::string> initial_symbols(std::string_view word) {
    std::vector<std::string> symbols;
    std::size_t i = 0;
    while (i < word.size()) {
        const auto lead = static_cast<unsigned char>(word[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) {
            len = 4;
        } else if (lead >= 0xE0) {
            len = 3;
        } else if (lead >= 0xC0) {
            len = 2;
        }
        len = std::min(len, word.size() - i);
        symbols.emplace_back(word.substr(i, len));
        i += len;
    }
    if (!symbols.empty()) {
        symbols.back() += kWordEnd;
    }
    return symbols;
}

std::string symbol_to_token(std::string_view symbol) {
    if (ends_with(symbol, kWordEnd)) {
        return std::string(symbol.substr(0, symbol.size() - kWordEnd.size()));
    }
    return std::string(symbol) + std::string(kContinuationMarker);
}

std::string merge_key(std::string_view left, std::string_view right) {
    std::string key(left);
    key += '\x1f';
    key += right;
    return key;
}

void apply_merge(std::vector<std::string>& symbols, std::string_view left, std::string_view right) {
    std::vector<std::string> out;
    out.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
            out.push_back(symbols[i] + symbols[i + 1]);
            ++i;
        } else {
            out.push_back(std::move(symbols[i]));
        }
    }
    symbols = std::move(out);
}

std::vector<std::pair<std::string, std::size_t>> ranked(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return items;
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) {
            ++j;
        }
        if (j == i) {
            break;
        }
        std::string_view chunk = text.substr(i, j - i);
        i = j;
        if (std::all_of(chunk.begin(), chunk.end(), is_edge_punct)) {
            words.emplace_back(chunk);
            continue;
        }
        std::vector<std::string> trailing;
        while (!chunk.empty() && is_edge_punct(chunk.front())) {
            words.emplace_back(1, chunk.front());
            chunk.remove_prefix(1);
        }
        while (!chunk.empty() && is_edge_punct(chunk.back())) {
            trailing.emplace_back(1, chunk.back());
            chunk.remove_suffix(1);
        }
        words.emplace_back(chunk);
        words.insert(words.end(), trailing.rbegin(), trailing.rend());
    }
    return words;
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, const VocabOptions& options) {
    if (corpus.empty()) {
        throw InputError("cannot build a vocabulary from an empty corpus");
    }
    std::map<std::string, std::size_t> word_counts;
    for (const std::string& line : corpus) {
        for (std::string& w : split_words(options.lowercase ? to_lower_ascii(line) : line)) {
            ++word_counts[std::move(w)];
        }
    }
    if (word_counts.empty()) {
        throw InputError("cannot build a vocabulary from a corpus with no words");
    }

    Vocabulary vocab;
    vocab.mode_ = options.mode;
    vocab.lowercase_ = options.lowercase;
    for (const std::string& name : kReservedNames) {
        vocab.add(name, 0);
    }

    if (options.mode == VocabMode::word) {
        std::size_t added = 0;
        for (auto& [word, count] : ranked(word_counts)) {
            if (options.max_size != 0 && added == options.max_size) {
                break;
            }
            if (std::find(std::begin(kReservedNames), std::end(kReservedNames), word) !=
                std::end(kReservedNames)) {
                continue;
            }
            vocab.add(word, count);
            ++added;
        }
        vocab.index();
        return vocab;
    }

    // Subword: greedy pair merges over the word-frequency table.
    std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
    std::map<std::string, std::size_t> base_symbols;
    for (const auto& [word, count] : word_counts) {
        auto symbols = initial_symbols(word);
        for (const auto& s : symbols) {
            base_symbols[s] += 0;
            // Both the final and the continuation form of each character.
            if (ends_with(s, kWordEnd)) {
                base_symbols[s.substr(0, s.size() - kWordEnd.size())] += 0;
            } else {
                base_symbols[s + std::string(kWordEnd)] += 0;
            }
        }
        words.emplace_back(std::move(symbols), count);
    }
    for (std::size_t m = 0; m < options.max_size; ++m) {
        std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
        for (const auto& [symbols, count] : words) {
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                pair_counts[{symbols[i], symbols[i + 1]}] += count;
            }
        }
        if (pair_counts.empty()) {
            break;
        }
        auto best = pair_counts.begin();
        for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
            if (it->second > best->second) {
                best = it;
            }
        }
        const auto [left, right] = best->first;
        vocab.merges_.emplace_back(left, right);
        for (auto& [symbols, count] : words) {
            apply_merge(symbols, left, right);
        }
    }
    std::map<std::string, std::size_t> token_counts;
    for (const auto& [symbol, zero] : base_symbols) {
        token_counts[symbol_to_token(symbol)] += zero;
    }
    for (const auto& [symbols, count] : words) {
        for (const auto& s : symbols) {
            token_counts[symbol_to_token(s)] += count;
        }
    }
    for (auto& [token, count] : ranked(token_counts)) {
        vocab.add(token, count);
    }
    vocab.index();
    return vocab;
}

void Vocabulary::add(std::string token, std::size_t frequency) {
    tokens_.push_back(std::move(token));
    frequencies_.push_back(frequency);
}

void Vocabulary::index() {
    lookup_.clear();
    for (std::size_t id = kReservedCount; id < tokens_.size(); ++id) {
        lookup_.emplace(tokens_[id], static_cast<TokenId>(id));
    }
    merge_rank_.clear();
    for (std::size_t r = 0; r < merges_.size(); ++r) {
        merge_rank_.emplace(merge_key(merges_[r].first, merges_[r].second), r);
    }
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(tokens_.size()));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    const auto it = lookup_.find(std::string(token));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Vocabulary::frequency(TokenId id) const {
    token(id);
    return frequencies_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::segment(std::string_view word) const {
    auto symbols = initial_symbols(word);
    while (symbols.size() > 1) {
        std::size_t best_rank = merges_.size();
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            const auto it = merge_rank_.find(merge_key(symbols[i], symbols[i + 1]));
            if (it != merge_rank_.end() && it->second < best_rank) {
                best_rank = it->second;
            }
        }
        if (best_rank == merges_.size()) {
            break;
        }
        apply_merge(symbols, merges_[best_rank].first, merges_[best_rank].second);
    }
    std::vector<std::string> pieces;
    pieces.reserve(symbols.size());
    for (const auto& s : symbols) {
        pieces.push_back(symbol_to_token(s));
    }
    return pieces;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    const auto words = split_words(lowercase_ ? to_lower_ascii(text) : std::string(text));
    for (const std::string& word : words) {
        if (mode_ == VocabMode::word) {
            ids.push_back(find(word).value_or(kUnkId));
            continue;
        }
        for (const std::string& piece : segment(word)) {
            ids.push_back(find(piece).value_or(kUnkId));
        }
    }
    return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
    std::string out;
    bool glue = false;
    for (TokenId id : ids) {
        const std::string& t = token(id);
        if (static_cast<std::size_t>(id) < kReservedCount) {
            continue;
        }
        if (!out.empty() && !glue) {
            out += ' ';
        }
        if (mode_ == VocabMode::subword && ends_with(t, kContinuationMarker)) {
            out.append(t, 0, t.size() - kContinuationMarker.size());
            glue = true;
        } else {
            out += t;
            glue = false;
        }
    }
    return out;
}

void Vocabulary::write(std::ostream& out) const {
    out << "# wmt-vocab v1 mode=" << (mode_ == VocabMode::word ? "word" : "subword")
        << " lowercase=" << (lowercase_ ? 1 : 0) << " size=" << tokens_.size() << '\n';
    for (const auto& [left, right] : merges_) {
        out << "#merge\t" << left << '\t' << right << '\n';
    }
    for (std::size_t id = 0; id < tokens_.size(); ++id) {
        out << id << '\t' << tokens_[id] << '\t' << frequencies_[id] << '\n';
    }
}

Vocabulary Vocabulary::read(std::istream& in, std::string_view origin) {
    Vocabulary vocab;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        return InputError(std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
    };
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# wmt-vocab", 0) == 0) {
            saw_header = true;
            vocab.mode_ = line.find("mode=subword") != std::string::npos ? VocabMode::subword
                                                                         : VocabMode::word;
            vocab.lowercase_ = line.find("lowercase=1") != std::string::npos;
            continue;
        }
        if (line.rfind("#merge\t", 0) == 0) {
            const auto rest = line.substr(7);
            const auto tab = rest.find('\t');
            if (tab == std::string::npos) {
                throw fail("malformed merge line");
            }
            vocab.merges_.emplace_back(rest.substr(0, tab), rest.substr(tab + 1));
            continue;
        }
        if (line.front() == '#') {
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw fail("expected id<TAB>token<TAB>frequency");
        }
        std::size_t id = 0;
        std::size_t freq = 0;
        try {
            id = std::stoull(line.substr(0, t1));
            freq = std::stoull(line.substr(t2 + 1));
        } catch (const std::exception&) {
            throw fail("non-numeric id or frequency");
        }
        if (id != vocab.tokens_.size()) {
            throw fail("ids must be contiguous from 0");
        }
        std::string token = line.substr(t1 + 1, t2 - t1 - 1);
        if (id < kReservedCount && token != kReservedNames[id]) {
            throw fail("reserved id " + std::to_string(id) + " must be " + kReservedNames[id]);
        }
        vocab.add(std::move(token), freq);
    }
    if (!saw_header) {
        throw InputError(std::string(origin) + ": missing wmt-vocab header");
    }
    if (vocab.tokens_.size() < kReservedCount) {
        throw InputError(std::string(origin) + ": vocabulary lacks reserved ids");
    }
    vocab.index();
    return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write vocabulary to " + path.string());
    }
    write(out);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open vocabulary " + path.string());
    }
    return read(in, path.string());
}

}  // namespace wmt
