#include "d2d/cld.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "d2d/digraph.hpp"
#include "d2d/error.hpp"

namespace d2d {

std::string_view to_string(VariableKind kind) {
    switch (kind) {
    case VariableKind::Stock: return "stock";
    case VariableKind::Auxiliary: return "auxiliary";
    case VariableKind::Constant: return "constant";
    }
    return "?";
}

std::string_view to_string(Polarity polarity) {
    switch (polarity) {
    case Polarity::Positive: return "+";
    case Polarity::Negative: return "-";
    case Polarity::Unspecified: return "?";
    }
    return "?";
}

std::string trim(std::string_view text) {
    constexpr std::string_view ws = " \t\r\n\v\f";
    const auto first = text.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(ws);
    return std::string(text.substr(first, last - first + 1));
}

std::optional<std::size_t> CausalLoopDiagram::find(std::string_view name) const {
    const std::string key = trim(name);
    for (std::size_t i = 0; i < variables.size(); ++i)
        if (variables[i].name == key) return i;
    return std::nullopt;
}

const Variable *CausalLoopDiagram::variable(std::string_view name) const {
    auto idx = find(name);
    return idx ? &variables[*idx] : nullptr;
}

std::string link_id(const Link &link) { return link.from + " -> " + link.to; }

std::string interaction_id(const InteractionTerm &term) {
    return term.from1 + " * " + term.from2 + " -> " + term.to;
}

std::size_t ValidationReport::error_count() const {
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(),
                                                  [](const auto &i) { return i.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const { return issues.size() - error_count(); }

bool ValidationReport::has(std::string_view code) const {
    return std::any_of(issues.begin(), issues.end(), [&](const auto &i) { return i.code == code; });
}

namespace {

std::vector<std::vector<std::string>> to_names(const CausalLoopDiagram &cld,
                                               const std::vector<std::vector<int>> &cycles) {
    std::vector<std::vector<std::string>> named;
    named.reserve(cycles.size());
    for (const auto &cycle : cycles) {
        std::vector<std::string> names;
        for (int v : cycle) names.push_back(cld.variables[v].name);
        named.push_back(std::move(names));
    }
    return named;
}

graph::Adjacency link_graph(const CausalLoopDiagram &cld, bool auxiliaries_only) {
    graph::Adjacency adj(cld.variables.size());
    for (const auto &link : cld.links) {
        auto from = cld.find(link.from);
        auto to = cld.find(link.to);
        if (!from || !to) continue;
        if (auxiliaries_only && (cld.variables[*from].kind != VariableKind::Auxiliary ||
                                 cld.variables[*to].kind != VariableKind::Auxiliary))
            continue;
        adj[*from].push_back(static_cast<int>(*to));
    }
    return adj;
}

std::map<std::string, int> membership_counts(const std::vector<std::vector<std::string>> &loops) {
    std::map<std::string, int> counts;
    for (const auto &loop : loops)
        for (const auto &name : loop) ++counts[name];
    return counts;
}

std::vector<std::string> order_candidates(std::vector<std::string> names, const std::map<std::string, int> &counts) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::stable_sort(names.begin(), names.end(), [&](const auto &a, const auto &b) {
        auto ca = counts.count(a) ? counts.at(a) : 0;
        auto cb = counts.count(b) ? counts.at(b) : 0;
        return ca > cb;
    });
    return names;
}

std::string join(const std::vector<std::string> &parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool has_nontrivial_edge(const graph::Adjacency &adj, const std::vector<int> &component) {
    if (component.size() >= 2) return true;
    const int v = component.front();
    return std::find(adj[v].begin(), adj[v].end(), v) != adj[v].end();
}

} // namespace

std::vector<std::vector<std::string>> enumerate_feedback_loops(const CausalLoopDiagram &cld, std::size_t limit) {
    return to_names(cld, graph::simple_cycles(link_graph(cld, false), limit));
}

std::vector<std::vector<std::string>> auxiliary_only_loops(const CausalLoopDiagram &cld, std::size_t limit) {
    return to_names(cld, graph::simple_cycles(link_graph(cld, true), limit));
}

std::vector<std::string> suggest_reclassification(const CausalLoopDiagram &cld, const std::vector<std::string> &loop,
                                                  std::size_t limit) {
    for (const auto &name : loop) {
        const Variable *v = cld.variable(name);
        if (!v || v->kind != VariableKind::Auxiliary)
            throw Error(ErrorCode::NotAuxLoop, "'" + name + "' is not an auxiliary; the loop already holds a stock",
                        name);
    }
    std::map<std::string, int> counts;
    try {
        counts = membership_counts(auxiliary_only_loops(cld, limit));
    } catch (const Error &e) {
        if (e.code() != ErrorCode::CycleLimitExceeded) throw;
        // Too many loops to count memberships; fall back to alphabetical order.
    }
    return order_candidates(loop, counts);
}

ValidationReport validate_structure(const CausalLoopDiagram &cld, std::size_t cycle_limit) {
    ValidationReport report;
    auto error = [&](std::string code, std::string message, std::vector<std::string> elements = {}) {
        report.issues.push_back({Severity::Error, std::move(code), std::move(message), std::move(elements), {}});
    };
    auto warning = [&](std::string code, std::string message, std::vector<std::string> elements = {}) {
        report.issues.push_back({Severity::Warning, std::move(code), std::move(message), std::move(elements), {}});
    };

    std::set<std::string> seen_names;
    for (const auto &v : cld.variables) {
        if (trim(v.name).empty()) {
            error("EMPTY_NAME", "variable with empty name");
            continue;
        }
        if (!seen_names.insert(v.name).second)
            error("DUPLICATE_VARIABLE", "variable '" + v.name + "' is declared more than once", {v.name});
        if (v.intervention_direction < -1 || v.intervention_direction > 1)
            error("BAD_DIRECTION",
                  "intervention direction of '" + v.name + "' must be -1, 0 or 1, got " +
                      std::to_string(v.intervention_direction),
                  {v.name});
    }

    std::vector<bool> touched(cld.variables.size(), false);
    auto touch = [&](const std::string &name) {
        if (auto idx = cld.find(name)) touched[*idx] = true;
    };

    std::set<std::pair<std::string, std::string>> seen_links;
    for (const auto &link : cld.links) {
        const auto id = link_id(link);
        touch(link.from);
        touch(link.to);
        bool dangling = false;
        for (const auto *end : {&link.from, &link.to}) {
            if (!cld.find(*end)) {
                error("DANGLING_LINK", "link " + id + " refers to undeclared variable '" + *end + "'", {id, *end});
                dangling = true;
            }
        }
        if (!dangling && cld.variable(link.to)->kind == VariableKind::Constant)
            error("CONSTANT_HAS_INPUT", "constant '" + link.to + "' has incoming link " + id, {id, link.to});
        if (!seen_links.insert({link.from, link.to}).second)
            error("DUPLICATE_LINK", "link " + id + " appears more than once", {id});
    }

    std::set<std::tuple<std::string, std::string, std::string>> seen_terms;
    for (const auto &term : cld.interactions) {
        const auto id = interaction_id(term);
        bool dangling = false;
        for (const auto *end : {&term.from1, &term.from2, &term.to}) {
            touch(*end);
            if (!cld.find(*end)) {
                error("DANGLING_LINK", "interaction " + id + " refers to undeclared variable '" + *end + "'",
                      {id, *end});
                dangling = true;
            }
        }
        if (!dangling && cld.variable(term.to)->kind == VariableKind::Constant)
            error("CONSTANT_HAS_INPUT", "constant '" + term.to + "' is the target of interaction " + id,
                  {id, term.to});
        auto key = std::minmax(term.from1, term.from2);
        if (!seen_terms.insert({key.first, key.second, term.to}).second)
            error("DUPLICATE_INTERACTION", "interaction " + id + " appears more than once", {id});
    }

    if (std::none_of(cld.variables.begin(), cld.variables.end(), [](const auto &v) { return v.is_voi; }))
        error("NO_VOI", "no variable is marked as a variable of interest (VOI)");

    // Auxiliary-only feedback loops: the simultaneous algebraic equations have no ordering.
    const auto aux_adj = link_graph(cld, true);
    try {
        const auto loops = to_names(cld, graph::simple_cycles(aux_adj, cycle_limit));
        const auto counts = membership_counts(loops);
        for (const auto &loop : loops) {
            ValidationIssue issue{Severity::Error, "AUX_ONLY_LOOP",
                                  "feedback loop [" + join(loop, " -> ") +
                                      "] contains no stock; relabel one of its auxiliaries as a stock (the one "
                                      "whose timescale is closest to the base time unit), or treat the loop as "
                                      "fast-acting and replace it by its equilibrium solution by hand",
                                  loop, order_candidates(loop, counts)};
            report.issues.push_back(std::move(issue));
        }
    } catch (const Error &e) {
        if (e.code() != ErrorCode::CycleLimitExceeded) throw;
        warning("CYCLE_LIMIT_EXCEEDED", "more than " + std::to_string(cycle_limit) +
                                            " auxiliary-only cycles; reporting strongly connected components instead");
        for (const auto &component : graph::strongly_connected_components(aux_adj)) {
            if (!has_nontrivial_edge(aux_adj, component)) continue;
            std::vector<std::string> names;
            for (int v : component) names.push_back(cld.variables[v].name);
            ValidationIssue issue{Severity::Error, "AUX_ONLY_LOOP",
                                  "auxiliaries {" + join(names, ", ") +
                                      "} form feedback loops without any stock; relabel at least one as a stock",
                                  names, order_candidates(names, {})};
            report.issues.push_back(std::move(issue));
        }
    }

    // Interaction terms between auxiliaries must not close an algebraic cycle either,
    // or the auxiliaries cannot be eliminated in any order.
    graph::Adjacency combined = aux_adj;
    bool interaction_edges = false;
    for (const auto &term : cld.interactions) {
        auto to = cld.find(term.to);
        if (!to || cld.variables[*to].kind != VariableKind::Auxiliary) continue;
        for (const auto *from : {&term.from1, &term.from2}) {
            auto idx = cld.find(*from);
            if (idx && cld.variables[*idx].kind == VariableKind::Auxiliary) {
                combined[*idx].push_back(static_cast<int>(*to));
                interaction_edges = true;
            }
        }
    }
    if (interaction_edges) {
        for (const auto &component : graph::strongly_connected_components(combined)) {
            if (!has_nontrivial_edge(combined, component)) continue;
            bool link_only = false;
            for (const auto &comp : graph::strongly_connected_components(aux_adj))
                if (comp == component && has_nontrivial_edge(aux_adj, comp)) link_only = true;
            if (link_only) continue;
            std::vector<std::string> names;
            for (int v : component) names.push_back(cld.variables[v].name);
            error("AUX_INTERACTION_CYCLE",
                  "interaction terms close an algebraic cycle among auxiliaries {" + join(names, ", ") + "}", names);
        }
    }

    for (std::size_t i = 0; i < cld.variables.size(); ++i)
        if (!touched[i] && !trim(cld.variables[i].name).empty())
            warning("ISOLATED_VARIABLE", "variable '" + cld.variables[i].name + "' has no links",
                    {cld.variables[i].name});

    if (std::none_of(cld.variables.begin(), cld.variables.end(),
                     [](const auto &v) { return v.intervention_direction != 0; }))
        warning("NO_INTERVENTION", "no variable is tagged for intervention (Tags = 1 or -1)");

    return report;
}

} // namespace d2d
