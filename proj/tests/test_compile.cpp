#include "catch_amalgamated.hpp"

#include <algorithm>
#include <random>

#include "d2d/compile.hpp"
#include "d2d/error.hpp"
#include "d2d/simulate.hpp"
#include "oracles.hpp"

using namespace d2d;
using Catch::Approx;

namespace {

Variable stock(std::string name) { return {std::move(name), VariableKind::Stock, 0, false}; }
Variable aux(std::string name) { return {std::move(name), VariableKind::Auxiliary, 0, false}; }
Link any(std::string from, std::string to) { return {std::move(from), std::move(to), Polarity::Unspecified}; }

// Sleep, mood and inflammation are stocks; perceived stress is an auxiliary.
CausalLoopDiagram sleep_mood() {
    CausalLoopDiagram cld;
    cld.variables = {stock("S"), stock("M"), stock("I"), aux("P")};
    cld.variables[1].is_voi = true;
    cld.links = {any("P", "S"), any("M", "S"), any("P", "M"), any("S", "M"), any("I", "M"),
                 any("S", "I"), any("P", "I"), any("S", "P"), any("M", "P")};
    return cld;
}

struct SleepMoodParams {
    double sp, sm, mp, ms, mi, is, ip, ps, pm;
    double bs, bm, bi, bp;
};

ParameterAssignment assign(const CausalLoopDiagram &cld, const SleepMoodParams &a) {
    auto p = ParameterAssignment::zeros(cld);
    p.link_strengths = {a.sp, a.sm, a.mp, a.ms, a.mi, a.is, a.ip, a.ps, a.pm};
    p.intercepts = {a.bs, a.bm, a.bi, a.bp};
    return p;
}

int slot(const CompiledLinearSystem &sys, const std::string &name) {
    const auto it = std::find(sys.state_names.begin(), sys.state_names.end(), name);
    REQUIRE(it != sys.state_names.end());
    return static_cast<int>(it - sys.state_names.begin());
}

void check_against_dae(const CausalLoopDiagram &cld, const ParameterAssignment &params, const InterventionSpec &iv,
                       int units, double tol) {
    const auto base = eliminate_auxiliaries(cld, params);
    const auto setup = apply_intervention(base, cld, params, iv);
    const auto traj = solve(setup.system, setup.x0, units);
    const auto reference = oracle::DaeSimulator(cld, params, iv).run(units, 100);
    REQUIRE(traj.times.size() == reference.size());
    for (std::size_t v = 0; v < cld.variables.size(); ++v) {
        const auto series = traj.series(cld.variables[v].name);
        REQUIRE(series.has_value());
        for (std::size_t t = 0; t < reference.size(); ++t)
            REQUIRE((*series)(static_cast<Eigen::Index>(t)) == Approx(reference[t][v]).margin(tol));
    }
}

} // namespace

TEST_CASE("sleep-mood coefficients after eliminating perceived stress", "[compile]") {
    const auto cld = sleep_mood();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int draw = 0; draw < 100; ++draw) {
        SleepMoodParams a{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng),
                         u(rng), u(rng), u(rng), u(rng)};
        const auto sys = eliminate_auxiliaries(cld, assign(cld, a));
        const int S = slot(sys, "S"), M = slot(sys, "M"), I = slot(sys, "I");
        CHECK(sys.A(S, S) == Approx(a.sp * a.ps).margin(1e-15));
        CHECK(sys.A(S, M) == Approx(a.sp * a.pm + a.sm).margin(1e-15));
        CHECK(sys.A(S, I) == 0.0);
        CHECK(sys.A(M, S) == Approx(a.mp * a.ps + a.ms).margin(1e-15));
        CHECK(sys.A(M, M) == Approx(a.mp * a.pm).margin(1e-15));
        CHECK(sys.A(M, I) == Approx(a.mi).margin(1e-15));
        CHECK(sys.A(I, S) == Approx(a.is + a.ip * a.ps).margin(1e-15));
        CHECK(sys.A(I, M) == Approx(a.ip * a.pm).margin(1e-15));
        CHECK(sys.A(I, I) == 0.0);
        CHECK(sys.b(S) == Approx(a.bs + a.sp * a.bp).margin(1e-15));
        CHECK(sys.b(M) == Approx(a.bm + a.mp * a.bp).margin(1e-15));
        CHECK(sys.b(I) == Approx(a.bi + a.ip * a.bp).margin(1e-15));

        const auto p = sys.aux_expansion("P");
        CHECK(p.coefficients(S) == Approx(a.ps).margin(1e-15));
        CHECK(p.coefficients(M) == Approx(a.pm).margin(1e-15));
        CHECK(p.constant == Approx(a.bp).margin(1e-15));
    }
}

TEST_CASE("sleep-mood entries isolated by zeroing the other parameters", "[compile]") {
    const auto cld = sleep_mood();
    SleepMoodParams a{};
    a.sp = 0.7;
    a.ps = -0.4;
    auto sys = eliminate_auxiliaries(cld, assign(cld, a));
    const int S = slot(sys, "S"), M = slot(sys, "M");
    CHECK(sys.A(S, S) == Approx(0.7 * -0.4));
    CHECK(sys.A.cwiseAbs().sum() == Approx(0.28));

    a = {};
    a.sp = 0.5;
    a.pm = 0.3;
    a.sm = -0.2;
    sys = eliminate_auxiliaries(cld, assign(cld, a));
    CHECK(sys.A(S, M) == Approx(0.5 * 0.3 - 0.2));
}

TEST_CASE("provenance lists the parameter products of every entry", "[compile]") {
    const auto cld = sleep_mood();
    CompilationPlan plan(cld);
    const auto prov = plan.provenance();
    REQUIRE(prov);
    auto describe_entry = [&](int r, int c) {
        std::vector<std::string> out;
        for (const auto &product : prov->entry(r, c)) {
            std::vector<std::string> names;
            for (const auto &ref : product) names.push_back(describe(cld, ref));
            std::sort(names.begin(), names.end());
            std::string joined;
            for (const auto &n : names) joined += (joined.empty() ? "" : " * ") + n;
            out.push_back(joined);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const int S = plan.state_slot(0), M = plan.state_slot(1);
    CHECK(describe_entry(S, S) == std::vector<std::string>{"P -> S * S -> P"});
    CHECK(describe_entry(S, M) == std::vector<std::string>{"M -> P * P -> S", "M -> S"});
    CHECK_FALSE(prov->truncated);
}

TEST_CASE("auxiliary intervention shifts b by the auxiliary's outgoing strengths", "[compile]") {
    auto cld = sleep_mood();
    SleepMoodParams a{0.1, 0.2, -0.3, 0.05, -0.1, 0.07, 0.2, -0.25, 0.15, 0, 0, 0, 0};
    const auto params = assign(cld, a);
    const auto sys = eliminate_auxiliaries(cld, params);
    const auto setup = apply_intervention(sys, cld, params, {"P", 1});
    const int S = slot(sys, "S"), M = slot(sys, "M"), I = slot(sys, "I");
    CHECK(setup.system.b(S) == Approx(a.sp));
    CHECK(setup.system.b(M) == Approx(a.mp));
    CHECK(setup.system.b(I) == Approx(a.ip));
    CHECK(setup.x0.isZero());
    check_against_dae(cld, params, {"P", 1}, 20, 1e-9);
    check_against_dae(cld, params, {"S", -1}, 20, 1e-9);
}

TEST_CASE("stock and constant interventions set the initial state", "[compile]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("A"), {"K", VariableKind::Constant, -1, false}};
    cld.variables[0].is_voi = true;
    cld.links = {any("K", "A")};
    auto params = ParameterAssignment::zeros(cld);
    params.link_strengths = {0.5};
    const auto sys = eliminate_auxiliaries(cld, params);
    const auto setup = apply_intervention(sys, cld, params, {"K", -1});
    CHECK(setup.x0(slot(sys, "K")) == -1.0);
    CHECK(sys.A.row(slot(sys, "K")).isZero());
    const auto traj = solve(setup.system, setup.x0, 4);
    CHECK(*traj.final_value("A") == Approx(-2.0));
    CHECK(*traj.final_value("K") == -1.0);
}

TEST_CASE("compile errors", "[compile]") {
    auto cld = sleep_mood();
    auto params = ParameterAssignment::zeros(cld);
    params.link_strengths.pop_back();
    CHECK_THROWS_MATCHES(eliminate_auxiliaries(cld, params), Error,
                         Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.code() == ErrorCode::ParameterMismatch;
                         }));

    cld.links[0].polarity = Polarity::Positive;
    params = ParameterAssignment::zeros(cld);
    params.link_strengths[0] = -0.1;
    CHECK_THROWS_MATCHES(eliminate_auxiliaries(cld, params), Error,
                         Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.code() == ErrorCode::PolarityViolation;
                         }));

    params.link_strengths[0] = 0.1;
    const auto sys = eliminate_auxiliaries(cld, params);
    CHECK_THROWS_MATCHES(apply_intervention(sys, cld, params, {"Nobody", 1}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.code() == ErrorCode::UnknownTarget;
                         }));

    CausalLoopDiagram loop;
    loop.variables = {aux("A"), aux("B")};
    loop.links = {any("A", "B"), any("B", "A")};
    CHECK_THROWS_MATCHES(CompilationPlan(loop), Error, Catch::Matchers::Predicate<Error>([](const Error &e) {
                             return e.code() == ErrorCode::AuxCycle;
                         }));
}

TEST_CASE("interaction terms stay bilinear and match the algebraic-differential form", "[compile]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("A"), stock("B"), aux("X"), stock("V")};
    cld.variables[3].is_voi = true;
    cld.links = {any("A", "X"), any("X", "V"), any("B", "V"), any("V", "A")};
    cld.interactions = {{"A", "B", "X", Polarity::Positive}, {"X", "X", "V", Polarity::Negative}};
    auto params = ParameterAssignment::zeros(cld);
    params.link_strengths = {0.3, 0.2, 0.1, -0.05};
    params.interaction_strengths = {0.15, -0.05};
    const auto sys = eliminate_auxiliaries(cld, params);
    CHECK(sys.nonlinear());
    check_against_dae(cld, params, {"A", 1}, 10, 1e-8);
    check_against_dae(cld, params, {"X", -1}, 10, 1e-8);
    check_against_dae(cld, params, {"B", 1}, 10, 1e-8);
}

TEST_CASE("reduction matches the algebraic-differential simulation on random diagrams", "[compile]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const auto cld = oracle::random_cld(rng);
        const auto params = oracle::random_parameters(cld, rng);
        for (const auto &v : cld.variables)
            if (v.intervention_direction != 0) check_against_dae(cld, params, {v.name, v.intervention_direction}, 20, 1e-6);
    }
}
