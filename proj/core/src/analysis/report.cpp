#include "wmt/analysis/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "wmt/analysis/memory.hpp"
#include "wmt/error.hpp"

namespace wmt::analysis {

namespace {

struct TagData {
    std::vector<PredictionRecord> all;
    std::vector<PredictionRecord> latest;
};

// Values are 0/1 for hit metrics and unique-token counts for diversity.
using MetricFn = double (*)(const PredictionRecord&, const Stoplist&);

double diversity_value(const PredictionRecord& r, const Stoplist&) {
    return static_cast<double>(unique_memory_tokens(r));
}

double keyword_value(const PredictionRecord& r, const Stoplist& s) {
    return keyword_in_memory(r, KeywordSource::predictions, s) ? 1.0 : 0.0;
}

double content_value(const PredictionRecord& r, const Stoplist& s) {
    return has_content_word(r, s) ? 1.0 : 0.0;
}

constexpr std::pair<std::string_view, MetricFn> kMetrics[] = {
    {"diversity", diversity_value},
    {"keyword", keyword_value},
    {"content", content_value},
};

std::string num(double v) { return fmt::format("{:.6f}", v); }

void trend_rows(std::string& out, const std::string& tag, std::string_view axis,
                const DiversityTrend& trend) {
    for (const TrendPoint& p : trend.points) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", tag, axis, num(p.x), num(p.mean), p.n,
                           num(trend.fit.slope), num(trend.fit.intercept),
                           trend.fit.defined ? 1 : 0);
    }
}

std::string probability_row(const ProbabilityWithCI& p) {
    return fmt::format("{},{},{},{},{}", p.hits, p.n, num(p.estimate), num(p.lower),
                       num(p.upper));
}

}  // namespace

const std::string& AnalysisReport::content(std::string_view name) const {
    for (const ReportFile& f : files) {
        if (f.name == name) {
            return f.content;
        }
    }
    throw ContractError("report has no file '" + std::string(name) + "'");
}

AnalysisReport build_report(std::span<const PredictionRecord> records,
                            const ReportOptions& options, const Stoplist& stoplist) {
    std::map<std::string, TagData> by_tag;
    for (const PredictionRecord& r : records) {
        if (r.tag.empty()) {
            throw InputError("prediction record without a corpus tag");
        }
        by_tag[r.tag].all.push_back(r);
    }
    for (auto& [tag, data] : by_tag) {
        std::size_t latest = 0;
        for (const PredictionRecord& r : data.all) {
            latest = std::max(latest, r.epoch);
        }
        for (const PredictionRecord& r : data.all) {
            if (r.epoch == latest) {
                data.latest.push_back(r);
            }
        }
    }

    std::vector<std::string> tags = options.tags;
    if (tags.empty()) {
        for (const auto& entry : by_tag) {
            tags.push_back(entry.first);
        }
    }
    const auto require = [&](const std::string& tag) -> const TagData& {
        const auto it = by_tag.find(tag);
        if (it == by_tag.end()) {
            throw InputError("no prediction records tagged '" + tag + "'");
        }
        return it->second;
    };
    for (const std::string& tag : tags) {
        require(tag);
    }
    std::vector<std::pair<std::string, std::string>> pairs = options.comparisons;
    if (pairs.empty()) {
        for (std::size_t i = 0; i < tags.size(); ++i) {
            for (std::size_t j = i + 1; j < tags.size(); ++j) {
                pairs.emplace_back(tags[i], tags[j]);
            }
        }
    }

    std::string hist = "tag,unique_tokens,count,fraction\n";
    std::string trend = "tag,axis,x,mean,n,slope,intercept,fit_defined\n";
    std::string keyword = "tag,source,hits,n,p,lower,upper\n";
    std::string content = "tag,hits,n,p,lower,upper\n";
    std::string pos = "tag,pos,multiplicity,count\n";
    for (const std::string& tag : tags) {
        const TagData& data = require(tag);
        const DiversityStats stats = diversity_histogram(data.latest, options.mem_size);
        for (std::size_t k = 0; k < stats.histogram.size(); ++k) {
            const double fraction = static_cast<double>(stats.histogram[k]) /
                                    static_cast<double>(data.latest.size());
            hist += fmt::format("{},{},{},{}\n", tag, k, stats.histogram[k], num(fraction));
        }

        DiversityTrend by_epoch;
        try {
            by_epoch = epoch_diversity_trend(data.all);
        } catch (const InputError&) {
            // A single epoch still gets its mean row, with no fit.
            const DiversityStats only = diversity_histogram(data.all, options.mem_size);
            by_epoch.points.push_back({static_cast<double>(data.all.front().epoch), only.mean,
                                       data.all.size()});
            by_epoch.fit.intercept = only.mean;
        }
        trend_rows(trend, tag, "epoch", by_epoch);
        trend_rows(trend, tag, "length", diversity_by_length(data.latest));

        for (KeywordSource source : {KeywordSource::predictions, KeywordSource::references}) {
            const bool has_refs = std::all_of(data.latest.begin(), data.latest.end(),
                                              [](const PredictionRecord& r) {
                                                  return !r.reference.empty();
                                              });
            if (source == KeywordSource::references && !has_refs) {
                continue;
            }
            keyword += fmt::format(
                "{},{},{}\n", tag, keyword_source_name(source),
                probability_row(keyword_in_memory_probability(data.latest, source, stoplist)));
        }
        content += fmt::format("{},{}\n", tag,
                               probability_row(content_word_probability(data.latest, stoplist)));

        const PosDistribution dist = pos_distribution(data.latest, options.mem_size);
        for (std::size_t t = 0; t < kAllPosTags.size(); ++t) {
            for (std::size_t k = 0; k < dist.counts[t].size(); ++k) {
                pos += fmt::format("{},{},{},{}\n", tag, pos_name(kAllPosTags[t]), k,
                                   dist.counts[t][k]);
            }
        }
    }

    std::string pvalues = "metric,tag_a,tag_b,statistic,p_value,method\n";
    for (const auto& [name, metric] : kMetrics) {
        for (const auto& [a, b] : pairs) {
            std::vector<double> xa;
            std::vector<double> xb;
            for (const PredictionRecord& r : require(a).latest) {
                xa.push_back(metric(r, stoplist));
            }
            for (const PredictionRecord& r : require(b).latest) {
                xb.push_back(metric(r, stoplist));
            }
            const RankSumResult test = wilcoxon_rank_sum(xa, xb, options.method);
            pvalues += fmt::format("{},{},{},{},{},{}\n", name, a, b, num(test.statistic),
                                   num(test.p_value), test.method);
        }
    }

    AnalysisReport report;
    report.files = {{"diversity_hist.csv", std::move(hist)},
                    {"diversity_trend.csv", std::move(trend)},
                    {"keyword_prob.csv", std::move(keyword)},
                    {"content_prob.csv", std::move(content)},
                    {"pos_dist.csv", std::move(pos)},
                    {"pairwise_pvalues.csv", std::move(pvalues)}};
    return report;
}

void write_report(const AnalysisReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const ReportFile& f : report.files) {
        std::ofstream out(dir / f.name, std::ios::binary);
        if (!out) {
            throw InputError("cannot write " + (dir / f.name).string());
        }
        out << f.content;
        if (!out) {
            throw InputError("write failed for " + (dir / f.name).string());
        }
    }
}

}  // namespace wmt::analysis
