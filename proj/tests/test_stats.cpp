#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "d2d/error.hpp"
#include "d2d/stats.hpp"
#include "oracles.hpp"

using namespace d2d;
using Catch::Approx;

TEST_CASE("median and type 7 percentiles", "[stats]") {
    CHECK(stats::median({0.3, 0.1, 0.2}) == 0.2);
    CHECK(stats::median({4, 1, 3, 2}) == 2.5);
    CHECK_THROWS_AS(stats::median({}), Error);
    // Values from R: quantile(c(1, 2, 4, 8, 16), c(0.025, 0.3, 0.975), type = 7)
    const std::vector<double> v{16, 1, 8, 2, 4};
    CHECK(stats::percentile(v, 0.025) == Approx(1.1));
    CHECK(stats::percentile(v, 0.3) == Approx(2.4));
    CHECK(stats::percentile(v, 0.975) == Approx(15.2));
    CHECK(stats::percentile(v, 0.0) == 1.0);
    CHECK(stats::percentile(v, 1.0) == 16.0);
}

TEST_CASE("average ranks share ties", "[stats]") {
    const std::vector<double> v{3, 1, 3, 2, 3};
    CHECK(stats::average_ranks(v) == std::vector<double>{4, 1, 4, 2, 4});
}

TEST_CASE("spearman equals rank-then-pearson by brute force", "[stats]") {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> len(3, 60), level(0, 6);
    std::normal_distribution<double> noise;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len(rng);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = level(rng);                      // heavy ties
            y[i] = trial % 3 ? noise(rng) : level(rng);
        }
        const auto rho = stats::spearman(x, y);
        const double expected = oracle::brute_spearman(x, y);
        if (std::isnan(expected)) {
            CHECK_FALSE(rho.has_value());
            continue;
        }
        REQUIRE(rho.has_value());
        REQUIRE(std::abs(*rho - expected) <= 1e-12);
    }
}

TEST_CASE("correlation is undefined for constant input", "[stats]") {
    const std::vector<double> flat{1, 1, 1}, up{1, 2, 3};
    CHECK_FALSE(stats::pearson(flat, up).has_value());
    CHECK_FALSE(stats::spearman(up, flat).has_value());
    CHECK(*stats::spearman(up, up) == Approx(1.0));
}

TEST_CASE("bootstrap plans are seeded and keep rows in range", "[stats]") {
    const stats::BootstrapPlan a(50, 20, 7), b(50, 20, 7), c(50, 20, 8);
    REQUIRE(a.size() == 20);
    bool differs = false;
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a.resample(r) == b.resample(r));
        CHECK(a.resample(r).size() == 50);
        CHECK(*std::max_element(a.resample(r).begin(), a.resample(r).end()) < 50);
        differs |= a.resample(r) != c.resample(r);
    }
    CHECK(differs);
}

TEST_CASE("percentile interval brackets the replicates", "[stats]") {
    std::vector<double> reps;
    for (int i = 0; i <= 100; ++i) reps.push_back(i);
    const auto ci = stats::percentile_interval(reps);
    CHECK(ci.low == Approx(2.5));
    CHECK(ci.high == Approx(97.5));
}
