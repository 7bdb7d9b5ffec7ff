#pragma once

// Causal loop diagram model and the structural rules a diagram must satisfy
// before it can be compiled into a linear system.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace d2d {

/// Flows and auxiliaries are one kind: both are set instantaneously by an
/// algebraic equation of their causes.
enum class VariableKind { Stock, Auxiliary, Constant };

enum class Polarity { Positive, Negative, Unspecified };

std::string_view to_string(VariableKind kind);
std::string_view to_string(Polarity polarity);

struct Variable {
    std::string name;
    VariableKind kind = VariableKind::Auxiliary;
    int intervention_direction = 0; ///< -1, 0 or +1
    bool is_voi = false;

    friend bool operator==(const Variable &, const Variable &) = default;
};

struct Link {
    std::string from;
    std::string to;
    Polarity polarity = Polarity::Unspecified;

    friend bool operator==(const Link &, const Link &) = default;
};

/// Second-order term from1 * from2 -> to. from1 == from2 is a quadratic term.
struct InteractionTerm {
    std::string from1;
    std::string from2;
    std::string to;
    Polarity polarity = Polarity::Unspecified;

    friend bool operator==(const InteractionTerm &, const InteractionTerm &) = default;
};

struct CausalLoopDiagram {
    std::vector<Variable> variables;
    std::vector<Link> links;
    std::vector<InteractionTerm> interactions;

    /// Index of the first variable with this exact (trimmed) name.
    std::optional<std::size_t> find(std::string_view name) const;
    const Variable *variable(std::string_view name) const;

    friend bool operator==(const CausalLoopDiagram &, const CausalLoopDiagram &) = default;
};

/// Stable display identities used by sampling, provenance and sensitivity reports.
std::string link_id(const Link &link);
std::string interaction_id(const InteractionTerm &term);

std::string trim(std::string_view text);

enum class Severity { Error, Warning };

struct ValidationIssue {
    Severity severity = Severity::Error;
    std::string code;                     ///< e.g. AUX_ONLY_LOOP
    std::string message;
    std::vector<std::string> elements;    ///< offending variables / links, in order
    std::vector<std::string> suggestions; ///< reclassification candidates, AUX_ONLY_LOOP only
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool runnable() const { return error_count() == 0; }
    std::size_t error_count() const;
    std::size_t warning_count() const;
    bool has(std::string_view code) const;
};

inline constexpr std::size_t kDefaultCycleLimit = 10'000;

/// All simple directed cycles of the link graph, one per rotation class, each
/// starting at its earliest-declared variable. Links that do not resolve are
/// skipped. Throws Error(CycleLimitExceeded) past `limit`.
std::vector<std::vector<std::string>> enumerate_feedback_loops(const CausalLoopDiagram &cld,
                                                               std::size_t limit = kDefaultCycleLimit);

/// Simple cycles made only of auxiliaries (the forbidden ones).
std::vector<std::vector<std::string>> auxiliary_only_loops(const CausalLoopDiagram &cld,
                                                           std::size_t limit = kDefaultCycleLimit);

/// Auxiliaries of an auxiliary-only loop ordered by how many auxiliary-only
/// loops they sit on (descending), then by name. Throws Error(NotAuxLoop) if the
/// loop holds anything but auxiliaries.
std::vector<std::string> suggest_reclassification(const CausalLoopDiagram &cld,
                                                  const std::vector<std::string> &loop,
                                                  std::size_t limit = kDefaultCycleLimit);

/// Pure structural check. Errors make the diagram non-runnable; warnings do not.
ValidationReport validate_structure(const CausalLoopDiagram &cld, std::size_t cycle_limit = kDefaultCycleLimit);

} // namespace d2d
