#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmt/analysis/stats.hpp"
#include "wmt/analysis/stoplist.hpp"
#include "wmt/prediction.hpp"

namespace wmt::analysis {

struct ReportOptions {
    std::size_t mem_size = 10;
    /// Tags to report, in output order. Empty means every tag present,
    /// sorted.
    std::vector<std::string> tags;
    /// Tag pairs to test. Empty means every pair of reported tags.
    std::vector<std::pair<std::string, std::string>> comparisons;
    RankSumMethod method = RankSumMethod::automatic;
};

struct ReportFile {
    std::string name;
    std::string content;
};

struct AnalysisReport {
    std::vector<ReportFile> files;

    const std::string& content(std::string_view name) const;
};

/// Builds every CSV from the given records. Per-tag statistics use each
/// tag's latest epoch; the epoch trend uses all epochs. Throws InputError
/// for a record without a tag, and for a requested tag or comparison tag
/// with no records.
AnalysisReport build_report(std::span<const PredictionRecord> records,
                            const ReportOptions& options, const Stoplist& stoplist);

/// Writes each file into `dir`, creating it if needed.
void write_report(const AnalysisReport& report, const std::filesystem::path& dir);

}  // namespace wmt::analysis
