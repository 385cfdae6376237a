#include "wmt/analysis/stats.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wmt/error.hpp"

namespace wmt::analysis {

namespace {

constexpr std::size_t kExactThreshold = 12;
constexpr std::size_t kExactLimit = 24;

std::vector<double> midranks(const std::vector<double>& pooled) {
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<double> ranks(pooled.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double exact_p(const std::vector<double>& ranks, std::size_t n1, double observed, double center) {
    const std::size_t n = ranks.size();
    const double target = std::abs(observed - center) - 1e-9;
    std::size_t extreme = 0;
    std::size_t total = 0;
    // Walk every n1-subset via bitmasks with exactly n1 bits set.
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != n1) {
            continue;
        }
        double w = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (mask & (1U << k)) {
                w += ranks[k];
            }
        }
        ++total;
        if (std::abs(w - center) >= target) {
            ++extreme;
        }
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

ProbabilityWithCI wilson_interval(std::size_t hits, std::size_t n, double z) {
    if (hits > n) {
        throw ContractError("wilson_interval: hits exceed n");
    }
    ProbabilityWithCI r;
    r.hits = hits;
    r.n = n;
    if (n == 0) {
        return r;
    }
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    r.estimate = p;
    r.lower = std::clamp(center - half, 0.0, p);
    r.upper = std::clamp(center + half, p, 1.0);
    return r;
}

RankSumMethod parse_rank_sum_method(std::string_view name) {
    if (name == "auto" || name == "automatic") {
        return RankSumMethod::automatic;
    }
    if (name == "exact") {
        return RankSumMethod::exact;
    }
    if (name == "normal") {
        return RankSumMethod::normal;
    }
    throw InputError("unknown rank-sum method '" + std::string(name) + "' (auto, exact, normal)");
}

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                RankSumMethod method) {
    if (a.empty() || b.empty()) {
        throw InputError("wilcoxon_rank_sum: both samples must be non-empty");
    }
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const std::size_t n = n1 + n2;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);
    RankSumResult r;
    r.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
    const double center = static_cast<double>(n1) * static_cast<double>(n + 1) / 2.0;

    const bool exact = method == RankSumMethod::exact ||
                       (method == RankSumMethod::automatic && n <= kExactThreshold);
    if (exact) {
        if (n > kExactLimit) {
            throw InputError("wilcoxon_rank_sum: exact enumeration limited to " +
                             std::to_string(kExactLimit) + " pooled values");
        }
        r.method = "exact";
        r.p_value = std::min(1.0, exact_p(ranks, n1, r.statistic, center));
        return r;
    }

    r.method = "normal";
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double nd = static_cast<double>(n);
    const double variance = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                            ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (variance <= 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const double distance = std::max(0.0, std::abs(r.statistic - center) - 0.5);
    const double z = distance / std::sqrt(variance);
    r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return r;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InputError("least_squares: x and y lengths differ");
    }
    if (x.size() < 2) {
        throw InputError("least_squares: need at least two points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    if (sxx == 0.0) {
        fit.intercept = my;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.defined = true;
    return fit;
}

}  // namespace wmt::analysis
