#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace wmt::analysis {

struct ProbabilityWithCI {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    std::size_t hits = 0;
    std::size_t n = 0;
};

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval. n == 0 gives estimate 0 with [0, 1].
ProbabilityWithCI wilson_interval(std::size_t hits, std::size_t n, double z = kZ95);

enum class RankSumMethod { automatic, exact, normal };

RankSumMethod parse_rank_sum_method(std::string_view name);

struct RankSumResult {
    /// Sum of the (mid)ranks of sample a in the pooled sample.
    double statistic = 0.0;
    double p_value = 1.0;
    /// "exact" or "normal".
    std::string_view method;
};

/// Two-sided Wilcoxon rank-sum test with midranks for ties. `automatic`
/// enumerates every group assignment when n1 + n2 <= 12 and otherwise uses
/// the normal approximation with tie-corrected variance and a 0.5
/// continuity correction. Throws InputError for an empty sample, and for
/// exact enumeration beyond 24 pooled values.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                RankSumMethod method = RankSumMethod::automatic);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// False when x has no spread; slope is then reported as 0.
    bool defined = false;
};

/// Ordinary least squares y = intercept + slope * x. Throws InputError for
/// fewer than two points or mismatched lengths.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace wmt::analysis
