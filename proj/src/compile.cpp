#include "d2d/compile.hpp"

#include <algorithm>

#include "d2d/digraph.hpp"
#include "d2d/error.hpp"

namespace d2d {

std::optional<double> ParameterAssignment::strength(const CausalLoopDiagram &cld, std::string_view from,
                                                    std::string_view to) const {
    const std::string f = trim(from), t = trim(to);
    for (std::size_t i = 0; i < cld.links.size() && i < link_strengths.size(); ++i)
        if (cld.links[i].from == f && cld.links[i].to == t) return link_strengths[i];
    return std::nullopt;
}

ParameterAssignment ParameterAssignment::zeros(const CausalLoopDiagram &cld) {
    return {std::vector<double>(cld.links.size(), 0.0), std::vector<double>(cld.interactions.size(), 0.0),
            std::vector<double>(cld.variables.size(), 0.0)};
}

std::string describe(const CausalLoopDiagram &cld, const ParameterRef &ref) {
    switch (ref.kind) {
    case ParameterRef::Kind::Link: return link_id(cld.links.at(ref.index));
    case ParameterRef::Kind::Interaction: return interaction_id(cld.interactions.at(ref.index));
    case ParameterRef::Kind::Intercept: return "intercept(" + cld.variables.at(ref.index).name + ")";
    }
    return {};
}

std::string label(const InterventionSpec &iv) {
    return iv.target + (iv.direction >= 0 ? " (+1)" : " (-1)");
}

CompilationPlan::CompilationPlan(const CausalLoopDiagram &cld) {
    const std::size_t n = cld.variables.size();
    state_slot_.assign(n, -1);
    aux_slot_.assign(n, -1);
    links_in_.resize(n);
    terms_in_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        names_.push_back(cld.variables[v].name);
        kinds_.push_back(cld.variables[v].kind);
        if (cld.variables[v].kind == VariableKind::Auxiliary) {
            aux_slot_[v] = static_cast<int>(aux_vars_.size());
            aux_vars_.push_back(static_cast<int>(v));
        } else {
            state_slot_[v] = static_cast<int>(state_vars_.size());
            state_vars_.push_back(static_cast<int>(v));
        }
    }

    auto resolve = [&](const std::string &name, const std::string &what) {
        auto idx = cld.find(name);
        if (!idx) throw Error(ErrorCode::NotRunnable, what + " refers to undeclared variable '" + name + "'", what);
        return static_cast<int>(*idx);
    };

    graph::Adjacency aux_graph(aux_vars_.size());
    for (std::size_t i = 0; i < cld.links.size(); ++i) {
        const auto &link = cld.links[i];
        const int from = resolve(link.from, link_id(link));
        const int to = resolve(link.to, link_id(link));
        if (kinds_[to] == VariableKind::Constant)
            throw Error(ErrorCode::NotRunnable, "constant '" + link.to + "' has an input", link_id(link));
        links_in_[to].push_back({i, from});
        link_polarity_.push_back(link.polarity);
        if (aux_slot_[from] >= 0 && aux_slot_[to] >= 0) aux_graph[aux_slot_[from]].push_back(aux_slot_[to]);
    }
    for (std::size_t i = 0; i < cld.interactions.size(); ++i) {
        const auto &term = cld.interactions[i];
        const auto id = interaction_id(term);
        const int f1 = resolve(term.from1, id), f2 = resolve(term.from2, id), to = resolve(term.to, id);
        if (kinds_[to] == VariableKind::Constant)
            throw Error(ErrorCode::NotRunnable, "constant '" + term.to + "' has an input", id);
        terms_in_[to].push_back({i, f1, f2});
        term_polarity_.push_back(term.polarity);
        for (int f : {f1, f2})
            if (aux_slot_[f] >= 0 && aux_slot_[to] >= 0) aux_graph[aux_slot_[f]].push_back(aux_slot_[to]);
    }
    link_count_ = cld.links.size();
    interaction_count_ = cld.interactions.size();

    auto order = graph::topological_order(aux_graph);
    if (!order) throw Error(ErrorCode::AuxCycle, "auxiliaries form an algebraic cycle; validate the diagram first");
    aux_order_ = std::move(*order);

    build_provenance();
}

void CompilationPlan::build_provenance() {
    const std::size_t dim = state_vars_.size();
    auto prov = std::make_shared<Provenance>();
    prov->dimension = dim;
    prov->matrix.resize(dim * dim);
    prov->intercept.resize(dim);

    using Paths = std::vector<ParameterProduct>;
    auto append = [&](Paths &into, const Paths &from, const ParameterRef &head) {
        for (const auto &path : from) {
            if (into.size() >= Provenance::kMaxProductsPerEntry) {
                prov->truncated = true;
                return;
            }
            ParameterProduct product{head};
            product.insert(product.end(), path.begin(), path.end());
            into.push_back(std::move(product));
        }
    };

    // Paths from every state (and intercepts) into each auxiliary.
    std::vector<std::vector<Paths>> aux_coef(aux_vars_.size(), std::vector<Paths>(dim));
    std::vector<Paths> aux_const(aux_vars_.size());
    auto accumulate = [&](int var, std::vector<Paths> &coef, Paths &constant) {
        constant.push_back({{ParameterRef::Kind::Intercept, static_cast<std::size_t>(var)}});
        for (const auto &in : links_in_[var]) {
            const ParameterRef ref{ParameterRef::Kind::Link, in.parameter};
            if (state_slot_[in.source] >= 0) {
                coef[state_slot_[in.source]].push_back({ref});
            } else {
                const int k = aux_slot_[in.source];
                for (std::size_t s = 0; s < dim; ++s) append(coef[s], aux_coef[k][s], ref);
                append(constant, aux_const[k], ref);
            }
        }
    };
    for (int slot : aux_order_) accumulate(aux_vars_[slot], aux_coef[slot], aux_const[slot]);
    for (std::size_t s = 0; s < dim; ++s) {
        const int var = state_vars_[s];
        if (kinds_[var] != VariableKind::Stock) continue;
        std::vector<Paths> coef(dim);
        accumulate(var, coef, prov->intercept[s]);
        for (std::size_t c = 0; c < dim; ++c) prov->matrix[s * dim + c] = std::move(coef[c]);
    }
    provenance_ = std::move(prov);
}

namespace {

void check_parameters(const CompilationPlan &plan, const ParameterAssignment &params) {
    if (params.link_strengths.size() != plan.link_count() ||
        params.interaction_strengths.size() != plan.interaction_count() ||
        (!params.intercepts.empty() && params.intercepts.size() != plan.variable_count()))
        throw Error(ErrorCode::ParameterMismatch, "parameter assignment does not match the diagram");
    auto check = [](Polarity p, double value, const char *what, std::size_t i) {
        if ((p == Polarity::Positive && value < 0.0) || (p == Polarity::Negative && value > 0.0))
            throw Error(ErrorCode::PolarityViolation,
                        std::string(what) + " " + std::to_string(i) + " has strength of the wrong sign");
    };
    for (std::size_t i = 0; i < plan.link_count(); ++i)
        check(plan.link_polarities()[i], params.link_strengths[i], "link", i);
    for (std::size_t i = 0; i < plan.interaction_count(); ++i)
        check(plan.interaction_polarities()[i], params.interaction_strengths[i], "interaction", i);
}

double intercept(const ParameterAssignment &params, int var) {
    return params.intercepts.empty() ? 0.0 : params.intercepts[var];
}

} // namespace

CompiledLinearSystem eliminate_auxiliaries(const CompilationPlan &plan, const ParameterAssignment &params) {
    check_parameters(plan, params);
    const auto dim = static_cast<Eigen::Index>(plan.state_dimension());
    const auto naux = static_cast<Eigen::Index>(plan.aux_count());

    CompiledLinearSystem sys;
    for (int var : plan.state_variables()) {
        sys.state_names.push_back(plan.name(var));
        sys.state_kinds.push_back(plan.kind(var));
    }
    for (int var : plan.aux_variables()) sys.aux_names.push_back(plan.name(var));
    sys.A = Eigen::MatrixXd::Zero(dim, dim);
    sys.b = Eigen::VectorXd::Zero(dim);
    sys.aux_coefficients = Eigen::MatrixXd::Zero(naux, dim);
    sys.aux_constants = Eigen::VectorXd::Zero(naux);
    sys.provenance = plan.provenance();

    // Each auxiliary is the affine combination of its causes, with upstream
    // auxiliaries already expanded in terms of the state.
    auto substitute = [&](int var, auto &&row, double &constant) {
        constant = intercept(params, var);
        for (const auto &in : plan.incoming_links(var)) {
            const double a = params.link_strengths[in.parameter];
            if (const int s = plan.state_slot(in.source); s >= 0) {
                row(s) += a;
            } else {
                const int k = plan.aux_slot(in.source);
                row += a * sys.aux_coefficients.row(k);
                constant += a * sys.aux_constants(k);
            }
        }
    };
    for (int slot : plan.aux_order()) {
        double constant = 0.0;
        substitute(plan.aux_variables()[slot], sys.aux_coefficients.row(slot), constant);
        sys.aux_constants(slot) = constant;
    }
    for (Eigen::Index s = 0; s < dim; ++s) {
        const int var = plan.state_variables()[s];
        if (plan.kind(var) != VariableKind::Stock) continue; // constants keep zero rows
        double constant = 0.0;
        substitute(var, sys.A.row(s), constant);
        sys.b(s) = constant;
    }

    // Unit responses: push a unit added to auxiliary j's equation downstream.
    sys.aux_unit_aux_gain = Eigen::MatrixXd::Zero(naux, naux);
    sys.aux_unit_state_gain = Eigen::MatrixXd::Zero(dim, naux);
    std::vector<int> position(naux);
    for (Eigen::Index p = 0; p < naux; ++p) position[plan.aux_order()[p]] = static_cast<int>(p);
    for (Eigen::Index j = 0; j < naux; ++j) {
        auto gain = sys.aux_unit_aux_gain.col(j);
        gain(j) = 1.0;
        for (Eigen::Index p = position[j] + 1; p < naux; ++p) {
            const int slot = plan.aux_order()[p];
            for (const auto &in : plan.incoming_links(plan.aux_variables()[slot]))
                if (const int k = plan.aux_slot(in.source); k >= 0)
                    gain(slot) += params.link_strengths[in.parameter] * gain(k);
        }
        for (Eigen::Index s = 0; s < dim; ++s) {
            const int var = plan.state_variables()[s];
            if (plan.kind(var) != VariableKind::Stock) continue;
            for (const auto &in : plan.incoming_links(var))
                if (const int k = plan.aux_slot(in.source); k >= 0)
                    sys.aux_unit_state_gain(s, j) += params.link_strengths[in.parameter] * gain(k);
        }
    }

    // Interaction terms, auxiliary targets in elimination order first, then stocks.
    auto factor = [&](int var) {
        return plan.aux_slot(var) >= 0 ? NonlinearTerm::Factor{true, plan.aux_slot(var)}
                                       : NonlinearTerm::Factor{false, plan.state_slot(var)};
    };
    auto add_terms = [&](int var) {
        for (const auto &in : plan.incoming_interactions(var)) {
            NonlinearTerm term;
            term.interaction = in.parameter;
            term.strength = params.interaction_strengths[in.parameter];
            term.first = factor(in.source);
            term.second = factor(in.source2);
            if (const int j = plan.aux_slot(var); j >= 0) {
                term.aux_gain = sys.aux_unit_aux_gain.col(j);
                term.state_gain = sys.aux_unit_state_gain.col(j);
            } else {
                term.aux_gain = Eigen::VectorXd::Zero(naux);
                term.state_gain = Eigen::VectorXd::Unit(dim, plan.state_slot(var));
            }
            sys.nonlinear_terms.push_back(std::move(term));
        }
    };
    for (int slot : plan.aux_order()) add_terms(plan.aux_variables()[slot]);
    for (int var : plan.state_variables()) add_terms(var);
    return sys;
}

CompiledLinearSystem eliminate_auxiliaries(const CausalLoopDiagram &cld, const ParameterAssignment &params) {
    return eliminate_auxiliaries(CompilationPlan(cld), params);
}

AffineExpression CompiledLinearSystem::aux_expansion(std::string_view name) const {
    auto it = std::find(aux_names.begin(), aux_names.end(), trim(name));
    if (it == aux_names.end()) throw Error(ErrorCode::UnknownTarget, "no auxiliary named '" + std::string(name) + "'");
    const auto k = it - aux_names.begin();
    return {aux_coefficients.row(k).transpose(), aux_constants(k)};
}

void CompiledLinearSystem::evaluate(const Eigen::VectorXd &x, Eigen::VectorXd *aux, Eigen::VectorXd *derivative) const {
    Eigen::VectorXd values = aux_coefficients * x + aux_constants;
    Eigen::VectorXd dx;
    if (derivative) dx = A * x + b;
    for (const auto &term : nonlinear_terms) {
        auto value_of = [&](const NonlinearTerm::Factor &f) { return f.auxiliary ? values(f.slot) : x(f.slot); };
        const double product = term.strength * value_of(term.first) * value_of(term.second);
        values += product * term.aux_gain;
        if (derivative) dx += product * term.state_gain;
    }
    if (aux) *aux = std::move(values);
    if (derivative) *derivative = std::move(dx);
}

InterventionSetup apply_intervention(CompiledLinearSystem system, const InterventionSpec &iv) {
    if (iv.direction != 1 && iv.direction != -1)
        throw Error(ErrorCode::UnknownTarget, "intervention direction must be +1 or -1", iv.target);
    const std::string target = trim(iv.target);
    const double dir = iv.direction;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.dimension()));
    if (auto it = std::find(system.state_names.begin(), system.state_names.end(), target);
        it != system.state_names.end()) {
        // Constants persist at the shifted value because their rows are zero.
        x0(it - system.state_names.begin()) = dir;
        return {std::move(x0), std::move(system)};
    }
    if (auto it = std::find(system.aux_names.begin(), system.aux_names.end(), target); it != system.aux_names.end()) {
        const auto j = it - system.aux_names.begin();
        system.b += dir * system.aux_unit_state_gain.col(j);
        system.aux_constants += dir * system.aux_unit_aux_gain.col(j);
        return {std::move(x0), std::move(system)};
    }
    throw Error(ErrorCode::UnknownTarget, "intervention target '" + target + "' is not a variable", target);
}

InterventionSetup apply_intervention(const CompiledLinearSystem &system, const CausalLoopDiagram &cld,
                                     const ParameterAssignment &, const InterventionSpec &iv) {
    if (!cld.find(iv.target))
        throw Error(ErrorCode::UnknownTarget, "intervention target '" + iv.target + "' is not a variable", iv.target);
    return apply_intervention(system, iv);
}

} // namespace d2d
