#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmt {

/// One model output, as written to a prediction dump.
struct PredictionRecord {
    std::string source;
    /// Reference translation, when known.
    std::string reference;
    std::string prediction;
    /// Memory tokens in generation order, as vocabulary strings.
    std::vector<std::string> memory;
    /// Full routed flag sequence, including the start position.
    std::vector<std::uint8_t> flags;
    std::string tag;
    std::size_t epoch = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// JSONL: a leading `# ...` header comment line, then one object per record
/// with keys src, ref, pred, mem, flags, tag, epoch, seed.
void write_prediction_dump(std::ostream& out, std::span<const PredictionRecord> records,
                           std::string_view header);
void save_prediction_dump(const std::filesystem::path& path,
                          std::span<const PredictionRecord> records, std::string_view header);

/// Skips `#` comment lines and blank lines. Throws InputError naming the
/// line for malformed JSON or missing keys, and when |mem| differs from the
/// number of zero flags.
std::vector<PredictionRecord> read_prediction_dump(std::istream& in,
                                                   std::string_view origin = "<stream>");
std::vector<PredictionRecord> load_prediction_dump(const std::filesystem::path& path);

}  // namespace wmt
