#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmt::analysis {

/// Lowercase function-word list.
class Stoplist {
public:
    Stoplist() = default;
    /// Words are lowercased; duplicates collapse.
    explicit Stoplist(std::span<const std::string> words);

    /// Built-in English list (also shipped as data/stoplist.txt).
    static const Stoplist& english();
    /// One word per line; '#' comments and blank lines are skipped.
    static Stoplist load(const std::filesystem::path& path);

    /// Case-insensitive membership.
    bool contains(std::string_view word) const;
    std::size_t size() const noexcept { return words_.size(); }
    /// Sorted.
    std::vector<std::string> words() const { return {words_.begin(), words_.end()}; }
    /// 64-bit FNV-1a over the sorted words, each followed by '\n'.
    std::uint64_t hash() const;

private:
    std::set<std::string, std::less<>> words_;
};

}  // namespace wmt::analysis
