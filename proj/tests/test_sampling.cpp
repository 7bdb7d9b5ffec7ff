#include "catch_amalgamated.hpp"

#include <algorithm>
#include <limits>

#include "d2d/error.hpp"
#include "d2d/sampling.hpp"

using namespace d2d;
using Catch::Approx;

namespace {

CausalLoopDiagram signed_diagram() {
    CausalLoopDiagram cld;
    cld.variables = {{"S", VariableKind::Stock, 1, true}, {"T", VariableKind::Stock, 0, false},
                     {"X", VariableKind::Auxiliary, 0, false}};
    cld.links = {{"T", "S", Polarity::Positive},   {"X", "S", Polarity::Negative}, {"S", "T", Polarity::Unspecified},
                 {"S", "X", Polarity::Positive},   {"T", "X", Polarity::Negative}, {"X", "T", Polarity::Unspecified}};
    cld.interactions = {{"S", "T", "X", Polarity::Positive},
                        {"S", "S", "T", Polarity::Negative},
                        {"T", "X", "S", Polarity::Unspecified}};
    return cld;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

} // namespace

TEST_CASE("draws respect polarity and approach the interval ends", "[sampling]") {
    const auto cld = signed_diagram();
    ModelSettings settings;
    settings.theta_max_stock = 0.1;
    settings.theta_max_aux = 0.3;
    settings.seed = 3;
    std::vector<Range> links(cld.links.size()), terms(cld.interactions.size());
    for (std::uint64_t k = 0; k < 10'000; ++k) {
        const auto p = sample_parameters(cld, settings, k);
        for (std::size_t i = 0; i < links.size(); ++i) links[i].add(p.link_strengths[i]);
        for (std::size_t i = 0; i < terms.size(); ++i) terms[i].add(p.interaction_strengths[i]);
        REQUIRE(std::all_of(p.intercepts.begin(), p.intercepts.end(), [](double b) { return b == 0.0; }));
    }
    auto check = [](const Range &r, double lo, double hi) {
        const double tol = 0.01 * (hi - lo);
        CHECK(r.lo >= lo);
        CHECK(r.hi <= hi);
        CHECK(r.lo <= lo + tol);
        CHECK(r.hi >= hi - tol);
    };
    check(links[0], 0.0, 0.1);   // + into stock
    check(links[1], -0.1, 0.0);  // - into stock
    check(links[2], -0.1, 0.1);  // ? into stock
    check(links[3], 0.0, 0.3);   // + into auxiliary
    check(links[4], -0.3, 0.0);  // - into auxiliary
    check(links[5], -0.1, 0.1);  // ? into stock
    check(terms[0], 0.0, 0.15);  // + into auxiliary, half width
    check(terms[1], -0.05, 0.0); // - into stock, half width
    check(terms[2], -0.05, 0.05);
}

TEST_CASE("a draw depends only on seed, sample index and link identity", "[sampling]") {
    auto cld = signed_diagram();
    ModelSettings settings;
    settings.seed = 42;
    const auto a = sample_parameters(cld, settings, 17);
    CHECK(a == sample_parameters(cld, settings, 17));

    // Reordering links and adding unrelated ones leaves each link's value alone.
    auto shuffled = cld;
    std::reverse(shuffled.links.begin(), shuffled.links.end());
    shuffled.variables.push_back({"Z", VariableKind::Stock, 0, false});
    shuffled.links.push_back({"Z", "S", Polarity::Positive});
    const auto b = sample_parameters(shuffled, settings, 17);
    for (std::size_t i = 0; i < cld.links.size(); ++i)
        CHECK(a.link_strengths[i] == b.link_strengths[cld.links.size() - 1 - i]);

    settings.seed = 43;
    CHECK_FALSE(a == sample_parameters(cld, settings, 17));
}

TEST_CASE("theta heuristic reproduces the worked arithmetic", "[sampling]") {
    CHECK(theta_max_heuristic(2, 60) == Approx(0.0333).margin(1e-4));
    CHECK(theta_max_heuristic(6, 60) == Approx(0.1).margin(1e-12));
    CHECK(theta_max_heuristic(2, 20) == Approx(0.1).margin(1e-12));
    CHECK_THROWS_AS(theta_max_heuristic(2, 0), Error);
    CHECK_THROWS_AS(theta_max_heuristic(-1, 20), Error);
}

TEST_CASE("settings checks name the offending field", "[sampling]") {
    ModelSettings s;
    CHECK_NOTHROW(check_settings(s));
    auto fails_on = [](ModelSettings bad, const std::string &field) {
        try {
            check_settings(bad);
        } catch (const Error &e) {
            return e.code() == ErrorCode::InvalidSettings && e.location() == field;
        }
        return false;
    };
    s.timeframe_units = 1;
    CHECK(fails_on(s, "timeframe_units"));
    s = {};
    s.theta_max_stock = 0;
    CHECK(fails_on(s, "theta_max_stock"));
    s = {};
    s.theta_max_aux = std::numeric_limits<double>::infinity();
    CHECK(fails_on(s, "theta_max_aux"));
    s = {};
    s.samples = 1;
    CHECK(fails_on(s, "samples"));
    s = {};
    s.bootstrap = 0;
    CHECK(fails_on(s, "bootstrap"));
}
