#include "d2d/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "d2d/error.hpp"
#include "d2d/random.hpp"

namespace d2d::stats {

double median(std::vector<double> values) { return percentile(std::move(values), 0.5); }

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::InsufficientSamples, "percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) return std::nullopt;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) return std::nullopt;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

Interval percentile_interval(std::vector<double> replicates, double level) {
    const double tail = 0.5 * (1.0 - level);
    return {percentile(replicates, tail), percentile(replicates, 1.0 - tail)};
}

BootstrapPlan::BootstrapPlan(std::size_t rows, int resamples, std::uint64_t seed) : rows_(rows) {
    constexpr std::uint64_t kBootstrapStream = 0xB0075'7A90'0000ULL;
    indices_.resize(static_cast<std::size_t>(std::max(resamples, 0)));
    for (std::size_t b = 0; b < indices_.size(); ++b) {
        CounterStream stream(seed, kBootstrapStream + b);
        auto &idx = indices_[b];
        idx.resize(rows);
        for (auto &i : idx) i = static_cast<std::uint32_t>(stream.next_below(rows));
    }
}

} // namespace d2d::stats
