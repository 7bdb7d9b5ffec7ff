#include "catch_amalgamated.hpp"

#include <algorithm>
#include <random>

#include "d2d/cld.hpp"
#include "d2d/error.hpp"
#include "oracles.hpp"

using namespace d2d;

namespace {

Variable stock(std::string name) { return {std::move(name), VariableKind::Stock, 0, false}; }
Variable aux(std::string name) { return {std::move(name), VariableKind::Auxiliary, 0, false}; }
Variable constant(std::string name) { return {std::move(name), VariableKind::Constant, 0, false}; }
Link pos(std::string from, std::string to) { return {std::move(from), std::move(to), Polarity::Positive}; }

CausalLoopDiagram sleep_mood() {
    CausalLoopDiagram cld;
    cld.variables = {stock("S"), stock("M"), stock("I"), aux("P")};
    cld.variables[1].is_voi = true;
    cld.variables[0].intervention_direction = 1;
    cld.links = {pos("S", "P"), pos("M", "P"), pos("P", "S"), pos("M", "S"), pos("P", "M"),
                 pos("S", "M"), pos("I", "M"), pos("S", "I"), pos("P", "I")};
    return cld;
}

std::vector<std::string> codes(const ValidationReport &r) {
    std::vector<std::string> out;
    for (const auto &i : r.issues) out.push_back(i.code);
    return out;
}

} // namespace

TEST_CASE("two auxiliaries feeding each other form an auxiliary-only loop", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {aux("A"), aux("B")};
    cld.variables[0].is_voi = true;
    cld.links = {pos("A", "B"), pos("B", "A")};
    const auto report = validate_structure(cld);
    REQUIRE(report.has("AUX_ONLY_LOOP"));
    CHECK_FALSE(report.runnable());
    const auto it = std::find_if(report.issues.begin(), report.issues.end(),
                                 [](const ValidationIssue &i) { return i.code == "AUX_ONLY_LOOP"; });
    CHECK(it->elements == std::vector<std::string>{"A", "B"});
    CHECK(it->suggestions == std::vector<std::string>{"A", "B"});
    CHECK(it->message.find("equilibrium") != std::string::npos);

    cld.variables[1].kind = VariableKind::Stock;
    CHECK(validate_structure(cld).error_count() == 0);
}

TEST_CASE("an auxiliary with a link to itself is an auxiliary-only loop", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {aux("A"), stock("V")};
    cld.variables[1].is_voi = true;
    cld.links = {pos("A", "A"), pos("A", "V")};
    CHECK(validate_structure(cld).has("AUX_ONLY_LOOP"));
}

TEST_CASE("structural errors carry codes and element names", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("X"), constant("Y"), stock("Z")};
    cld.links = {pos("X", "Y"), pos("X", "Q"), pos("X", "Z"), pos("X", "Z")};
    const auto report = validate_structure(cld);
    const auto c = codes(report);
    for (const char *code : {"CONSTANT_HAS_INPUT", "DANGLING_LINK", "DUPLICATE_LINK", "NO_VOI"})
        CHECK(std::count(c.begin(), c.end(), code) >= 1);
    const auto dangling = std::find_if(report.issues.begin(), report.issues.end(),
                                       [](const ValidationIssue &i) { return i.code == "DANGLING_LINK"; });
    CHECK(std::find(dangling->elements.begin(), dangling->elements.end(), "Q") != dangling->elements.end());
}

TEST_CASE("names, duplicates, directions and isolation", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("A"), stock("A"), stock(" "), stock("Lonely")};
    cld.variables[0].is_voi = true;
    cld.variables[3].intervention_direction = 2;
    cld.links = {pos("A", "A")};
    const auto c = codes(validate_structure(cld));
    for (const char *code : {"DUPLICATE_VARIABLE", "EMPTY_NAME", "BAD_DIRECTION"})
        CHECK(std::count(c.begin(), c.end(), code) == 1);
    CHECK(std::count(c.begin(), c.end(), "ISOLATED_VARIABLE") >= 1);
}

TEST_CASE("missing intervention tags are a warning, not an error", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("A"), stock("B")};
    cld.variables[0].is_voi = true;
    cld.links = {pos("B", "A")};
    const auto report = validate_structure(cld);
    CHECK(report.runnable());
    CHECK(report.has("NO_INTERVENTION"));
}

TEST_CASE("interaction terms are checked for targets and duplicates", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("A"), stock("B"), constant("K")};
    cld.variables[0].is_voi = true;
    cld.links = {pos("B", "A")};
    cld.interactions = {{"A", "B", "K", Polarity::Positive},
                        {"A", "B", "A", Polarity::Positive},
                        {"B", "A", "A", Polarity::Negative},
                        {"A", "A", "B", Polarity::Positive},
                        {"A", "Nope", "B", Polarity::Positive}};
    const auto c = codes(validate_structure(cld));
    CHECK(std::count(c.begin(), c.end(), "CONSTANT_HAS_INPUT") == 1);
    CHECK(std::count(c.begin(), c.end(), "DUPLICATE_INTERACTION") == 1);
    CHECK(std::count(c.begin(), c.end(), "DANGLING_LINK") == 1);
}

TEST_CASE("interactions closing an auxiliary cycle are rejected", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {aux("A"), aux("B"), stock("V")};
    cld.variables[2].is_voi = true;
    cld.links = {pos("A", "B"), pos("B", "V")};
    cld.interactions = {{"B", "V", "A", Polarity::Positive}};
    const auto report = validate_structure(cld);
    CHECK_FALSE(report.has("AUX_ONLY_LOOP"));
    CHECK(report.has("AUX_INTERACTION_CYCLE"));
}

TEST_CASE("feedback loops of the sleep-mood fixture match brute force", "[cld]") {
    const auto cld = sleep_mood();
    const auto loops = enumerate_feedback_loops(cld);
    std::vector<std::vector<int>> adj(cld.variables.size());
    for (const auto &l : cld.links) adj[*cld.find(l.from)].push_back(static_cast<int>(*cld.find(l.to)));
    const auto expected = oracle::brute_force_cycles(adj);
    REQUIRE(loops.size() == expected.size());
    std::vector<std::vector<int>> as_indices;
    for (const auto &loop : loops) {
        std::vector<int> idx;
        for (const auto &name : loop) idx.push_back(static_cast<int>(*cld.find(name)));
        as_indices.push_back(idx);
    }
    std::sort(as_indices.begin(), as_indices.end());
    CHECK(as_indices == expected);
    CHECK(validate_structure(cld).error_count() == 0);
}

TEST_CASE("acyclic and two-node loop enumeration", "[cld]") {
    CausalLoopDiagram cld;
    cld.variables = {stock("A"), stock("B"), stock("C")};
    cld.links = {pos("A", "B"), pos("B", "C")};
    CHECK(enumerate_feedback_loops(cld).empty());
    cld.links = {pos("A", "B"), pos("B", "A")};
    CHECK(enumerate_feedback_loops(cld) == std::vector<std::vector<std::string>>{{"A", "B"}});
}

TEST_CASE("reclassification suggestions order by loop membership then name", "[cld]") {
    CausalLoopDiagram cld;
    // A sits on A<->B and A<->C; B and C on one loop each.
    cld.variables = {aux("B"), aux("A"), aux("C"), stock("V")};
    cld.variables[3].is_voi = true;
    cld.links = {pos("A", "B"), pos("B", "A"), pos("A", "C"), pos("C", "A"), pos("A", "V")};
    CHECK(suggest_reclassification(cld, {"B", "A"}) == std::vector<std::string>{"A", "B"});

    CausalLoopDiagram tie;
    tie.variables = {aux("B"), aux("A")};
    tie.links = {pos("A", "B"), pos("B", "A")};
    CHECK(suggest_reclassification(tie, {"B", "A"}) == std::vector<std::string>{"A", "B"});

    try {
        suggest_reclassification(cld, {"A", "V"});
        FAIL("expected NotAuxLoop");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotAuxLoop);
    }
}

TEST_CASE("dense auxiliary graphs fall back to the component check", "[cld]") {
    CausalLoopDiagram cld;
    for (int i = 0; i < 7; ++i) cld.variables.push_back(aux("A" + std::to_string(i)));
    cld.variables.push_back(stock("V"));
    cld.variables.back().is_voi = true;
    for (int a = 0; a < 7; ++a)
        for (int b = 0; b < 7; ++b)
            if (a != b) cld.links.push_back(pos("A" + std::to_string(a), "A" + std::to_string(b)));
    cld.links.push_back(pos("A0", "V"));
    const auto report = validate_structure(cld, 100);
    CHECK(report.has("CYCLE_LIMIT_EXCEEDED"));
    CHECK(report.has("AUX_ONLY_LOOP"));
}

TEST_CASE("validation is pure and every runnable diagram has a stock on each loop", "[cld]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto cld = oracle::random_cld(rng);
        // Scramble kinds so some diagrams fail.
        std::bernoulli_distribution flip(0.3);
        for (auto &v : cld.variables)
            if (v.kind != VariableKind::Constant && flip(rng))
                v.kind = v.kind == VariableKind::Stock ? VariableKind::Auxiliary : VariableKind::Stock;
        const auto first = validate_structure(cld);
        const auto second = validate_structure(cld);
        REQUIRE(codes(first) == codes(second));
        if (!first.runnable()) continue;
        for (const auto &loop : enumerate_feedback_loops(cld)) {
            const bool has_stock = std::any_of(loop.begin(), loop.end(), [&](const std::string &n) {
                return cld.variable(n)->kind == VariableKind::Stock;
            });
            CHECK(has_stock);
        }
    }
}
