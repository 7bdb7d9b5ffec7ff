#pragma once

// Reduction of a causal loop diagram plus one set of link strengths to
// dx/dt = A x + b over stocks and constants, with auxiliaries substituted away.

#include <compare>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "d2d/cld.hpp"

namespace d2d {

/// One draw of every model parameter. Vectors are aligned with the diagram:
/// link_strengths[i] belongs to cld.links[i], and so on.
struct ParameterAssignment {
    std::vector<double> link_strengths;
    std::vector<double> interaction_strengths;
    std::vector<double> intercepts; ///< per variable; zero in every D2D run

    /// Strength of the link from -> to, or nullopt if the diagram has no such link.
    std::optional<double> strength(const CausalLoopDiagram &cld, std::string_view from, std::string_view to) const;

    static ParameterAssignment zeros(const CausalLoopDiagram &cld);

    friend bool operator==(const ParameterAssignment &, const ParameterAssignment &) = default;
};

struct ParameterRef {
    enum class Kind { Link, Interaction, Intercept };
    Kind kind = Kind::Link;
    std::size_t index = 0;

    friend auto operator<=>(const ParameterRef &, const ParameterRef &) = default;
};

std::string describe(const CausalLoopDiagram &cld, const ParameterRef &ref);

/// A product of parameters, e.g. {P->S, S->P} for a_sp * a_ps.
using ParameterProduct = std::vector<ParameterRef>;

/// Structural record of which parameter products build every entry of A and b.
struct Provenance {
    std::size_t dimension = 0;
    std::vector<std::vector<ParameterProduct>> matrix; ///< row-major, dimension x dimension
    std::vector<std::vector<ParameterProduct>> intercept;
    bool truncated = false; ///< some entry exceeded kMaxProductsPerEntry

    static constexpr std::size_t kMaxProductsPerEntry = 10'000;

    const std::vector<ParameterProduct> &entry(std::size_t row, std::size_t col) const {
        return matrix[row * dimension + col];
    }
};

/// Per-diagram structure shared by every sample: state/auxiliary indexing, the
/// elimination order and provenance. Built once, reused for all samples.
class CompilationPlan {
  public:
    /// Throws Error(AuxCycle) if auxiliaries cannot be ordered and
    /// Error(NotRunnable) if a link does not resolve.
    explicit CompilationPlan(const CausalLoopDiagram &cld);

    struct Incoming {
        std::size_t parameter; ///< link or interaction index
        int source;            ///< variable index (first factor for interactions)
        int source2 = -1;      ///< second factor, interactions only
    };

    std::size_t variable_count() const { return kinds_.size(); }
    std::size_t state_dimension() const { return state_vars_.size(); }
    std::size_t aux_count() const { return aux_vars_.size(); }

    const std::vector<int> &state_variables() const { return state_vars_; }
    const std::vector<int> &aux_variables() const { return aux_vars_; }
    /// Auxiliary slots in elimination order.
    const std::vector<int> &aux_order() const { return aux_order_; }

    int state_slot(int variable) const { return state_slot_[variable]; }
    int aux_slot(int variable) const { return aux_slot_[variable]; }
    VariableKind kind(int variable) const { return kinds_[variable]; }
    const std::string &name(int variable) const { return names_[variable]; }

    const std::vector<Incoming> &incoming_links(int variable) const { return links_in_[variable]; }
    const std::vector<Incoming> &incoming_interactions(int variable) const { return terms_in_[variable]; }

    std::size_t link_count() const { return link_count_; }
    std::size_t interaction_count() const { return interaction_count_; }
    const std::vector<Polarity> &link_polarities() const { return link_polarity_; }
    const std::vector<Polarity> &interaction_polarities() const { return term_polarity_; }

    std::shared_ptr<const Provenance> provenance() const { return provenance_; }

  private:
    void build_provenance();

    std::vector<std::string> names_;
    std::vector<VariableKind> kinds_;
    std::vector<int> state_vars_, aux_vars_, aux_order_;
    std::vector<int> state_slot_, aux_slot_;
    std::vector<std::vector<Incoming>> links_in_, terms_in_;
    std::size_t link_count_ = 0, interaction_count_ = 0;
    std::vector<Polarity> link_polarity_, term_polarity_;
    std::shared_ptr<const Provenance> provenance_;
};

/// Affine expansion value = coefficients . x + constant over the state vector.
struct AffineExpression {
    Eigen::VectorXd coefficients;
    double constant = 0.0;
};

/// A bilinear contribution strength * factor1 * factor2. Factors are state or
/// auxiliary values; the product enters through `state_gain` (into dx/dt) and
/// `aux_gain` (into auxiliary values downstream of an auxiliary target).
struct NonlinearTerm {
    struct Factor {
        bool auxiliary = false;
        int slot = 0;
    };
    std::size_t interaction = 0;
    double strength = 0.0;
    Factor first, second;
    Eigen::VectorXd state_gain;
    Eigen::VectorXd aux_gain;
};

struct CompiledLinearSystem {
    std::vector<std::string> state_names;
    std::vector<VariableKind> state_kinds;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    std::vector<std::string> aux_names; ///< declaration order
    Eigen::MatrixXd aux_coefficients;   ///< aux_count x S, linear part of each auxiliary
    Eigen::VectorXd aux_constants;

    /// Response to a unit added to one auxiliary's equation: column k holds the
    /// gain into every state derivative (S x aux) or auxiliary value (aux x aux).
    Eigen::MatrixXd aux_unit_state_gain;
    Eigen::MatrixXd aux_unit_aux_gain;

    std::vector<NonlinearTerm> nonlinear_terms; ///< ordered so upstream targets come first
    std::shared_ptr<const Provenance> provenance;

    std::size_t dimension() const { return state_names.size(); }
    bool nonlinear() const { return !nonlinear_terms.empty(); }

    AffineExpression aux_expansion(std::string_view name) const;

    /// Auxiliary values and dx/dt at state x. Either output may be null.
    void evaluate(const Eigen::VectorXd &x, Eigen::VectorXd *aux, Eigen::VectorXd *derivative) const;
};

struct InterventionSpec {
    std::string target;
    int direction = 1; ///< -1 or +1

    friend bool operator==(const InterventionSpec &, const InterventionSpec &) = default;
};

std::string label(const InterventionSpec &iv);

/// Substitute concrete strengths into the plan. Throws Error(ParameterMismatch)
/// on size mismatch and Error(PolarityViolation) when a signed link has the
/// wrong sign.
CompiledLinearSystem eliminate_auxiliaries(const CompilationPlan &plan, const ParameterAssignment &params);
CompiledLinearSystem eliminate_auxiliaries(const CausalLoopDiagram &cld, const ParameterAssignment &params);

struct InterventionSetup {
    Eigen::VectorXd x0;
    CompiledLinearSystem system;
};

/// Stock: initial value shifted. Constant: value shifted for the whole run.
/// Auxiliary: a constant unit added to its equation, folded into b and into
/// the downstream auxiliary constants. Throws Error(UnknownTarget).
InterventionSetup apply_intervention(CompiledLinearSystem system, const InterventionSpec &iv);
InterventionSetup apply_intervention(const CompiledLinearSystem &system, const CausalLoopDiagram &cld,
                                     const ParameterAssignment &params, const InterventionSpec &iv);

} // namespace d2d
