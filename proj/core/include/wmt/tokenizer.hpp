#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace wmt {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kStartId = 1;
inline constexpr TokenId kEndId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kReservedCount = 4;

/// Suffix carried by subword pieces that continue into the next piece.
inline constexpr std::string_view kContinuationMarker = "@@";

enum class VocabMode { word, subword };

struct VocabOptions {
    VocabMode mode = VocabMode::word;
    /// word mode: maximum number of corpus entries (0 = unbounded).
    /// subword mode: number of merges to learn.
    std::size_t max_size = 0;
    bool lowercase = false;
};

/// Splits on whitespace and peels ASCII punctuation off word edges, so
/// "cat." becomes {"cat", "."}. Inner apostrophes/hyphens stay attached.
std::vector<std::string> split_words(std::string_view text);

/// Token table with reserved ids pad=0, start=1, end=2, unk=3.
///
/// The model's output layer is size() + 2 wide; the two extra units are flag
/// logits and never appear here.
class Vocabulary {
public:
    static Vocabulary build(std::span<const std::string> corpus, const VocabOptions& options = {});

    std::vector<TokenId> encode(std::string_view text) const;
    /// Reserved ids are dropped; subword pieces are re-joined at markers.
    /// Throws InputError on an id outside the table.
    std::string decode(std::span<const TokenId> ids) const;

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::string& token(TokenId id) const;
    std::optional<TokenId> find(std::string_view token) const;
    std::size_t frequency(TokenId id) const;

    VocabMode mode() const noexcept { return mode_; }
    bool lowercase() const noexcept { return lowercase_; }
    const std::vector<std::pair<std::string, std::string>>& merges() const noexcept {
        return merges_;
    }

    /// Line format: header comment, optional `#merge` lines, then
    /// `id<TAB>token<TAB>frequency` for every id.
    void write(std::ostream& out) const;
    static Vocabulary read(std::istream& in, std::string_view origin = "<stream>");
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

private:
    void add(std::string token, std::size_t frequency);
    void index();
    std::vector<std::string> segment(std::string_view word) const;

    VocabMode mode_ = VocabMode::word;
    bool lowercase_ = false;
    std::vector<std::string> tokens_;
    std::vector<std::size_t> frequencies_;
    std::vector<std::pair<std::string, std::string>> merges_;
    std::unordered_map<std::string, TokenId> lookup_;
    std::unordered_map<std::string, std::size_t> merge_rank_;
};

}  // namespace wmt
