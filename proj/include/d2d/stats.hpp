#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace d2d::stats {

/// Throws Error(InsufficientSamples) on empty input.
double median(std::vector<double> values);

/// Linear-interpolation percentile (Hyndman-Fan type 7), q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// nullopt when either side has zero variance or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// 2.5th and 97.5th percentiles of a bootstrap distribution.
Interval percentile_interval(std::vector<double> replicates, double level = 0.95);

/// B resamples, with replacement, of row indices 0..n-1. Every statistic draws
/// on the same plan, so resampling always keeps whole rows (paired samples)
/// together.
class BootstrapPlan {
  public:
    BootstrapPlan(std::size_t rows, int resamples, std::uint64_t seed);

    std::size_t rows() const { return rows_; }
    std::size_t size() const { return indices_.size(); }
    const std::vector<std::uint32_t> &resample(std::size_t b) const { return indices_[b]; }

  private:
    std::size_t rows_;
    std::vector<std::vector<std::uint32_t>> indices_;
};

} // namespace d2d::stats
