#include "d2d/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>

#include <omp.h>

#include "d2d/error.hpp"
#include "d2d/simulate.hpp"

namespace d2d {

std::size_t EffectMatrix::divergent_count() const {
    return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), std::uint8_t{1}));
}

const VoiResult *ExperimentResult::voi(std::string_view name) const {
    for (const auto &v : vois)
        if (v.effects.voi == name) return &v;
    return nullptr;
}

int resolve_thread_count(int requested) {
    int threads = requested > 0 ? requested : omp_get_max_threads();
    if (const char *cap = std::getenv("D2D_THREADS")) {
        const int limit = std::atoi(cap);
        if (limit > 0) threads = std::min(threads, limit);
    }
    return std::max(threads, 1);
}

std::vector<InterventionSpec> tagged_interventions(const CausalLoopDiagram &cld) {
    std::vector<InterventionSpec> out;
    for (const auto &v : cld.variables)
        if (v.intervention_direction != 0) out.push_back({v.name, v.intervention_direction > 0 ? 1 : -1});
    return out;
}

std::vector<std::string> variables_of_interest(const CausalLoopDiagram &cld) {
    std::vector<std::string> out;
    for (const auto &v : cld.variables)
        if (v.is_voi) out.push_back(v.name);
    return out;
}

std::uint64_t bootstrap_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

namespace {

std::vector<EffectMatrix> allocate(std::size_t n, const std::vector<InterventionSpec> &interventions,
                                   const std::vector<std::string> &vois, int timeframe_units, bool record_paths) {
    std::vector<EffectMatrix> out(vois.size());
    const auto j = static_cast<Eigen::Index>(interventions.size());
    for (std::size_t v = 0; v < vois.size(); ++v) {
        out[v].interventions = interventions;
        out[v].voi = vois[v];
        out[v].effects = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), j);
        out[v].divergent.assign(n * interventions.size(), 0);
        if (record_paths) out[v].paths = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * j, timeframe_units + 1);
    }
    return out;
}

// One parameter sample: compile once, then run every intervention. Writes only
// row k of each output, so samples are independent of scheduling.
void evaluate_sample(const CompilationPlan &plan, const ParameterAssignment &params, std::size_t k,
                     const std::vector<InterventionSpec> &interventions, const std::vector<std::string> &vois,
                     int timeframe_units, std::vector<EffectMatrix> &out) {
    const CompiledLinearSystem system = eliminate_auxiliaries(plan, params);
    const std::size_t columns = interventions.size();
    for (std::size_t j = 0; j < columns; ++j) {
        auto setup = apply_intervention(system, interventions[j]);
        try {
            const Trajectory traj = solve(setup.system, setup.x0, timeframe_units);
            for (std::size_t v = 0; v < vois.size(); ++v) {
                const auto series = traj.series(vois[v]);
                if (!series) throw Error(ErrorCode::UnknownTarget, "VOI '" + vois[v] + "' is not a variable");
                out[v].effects(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                    (*series)(series->size() - 1);
                if (out[v].paths.size() > 0)
                    out[v].paths.row(static_cast<Eigen::Index>(k * columns + j)) = series->transpose();
            }
        } catch (const Error &e) {
            if (e.code() != ErrorCode::NonFiniteState) throw;
            for (auto &m : out) m.divergent[k * columns + j] = 1;
        }
    }
}

} // namespace

std::vector<EffectMatrix> evaluate_effects_serial(const CompilationPlan &plan,
                                                  std::span<const ParameterAssignment> samples,
                                                  const std::vector<InterventionSpec> &interventions,
                                                  const std::vector<std::string> &vois, int timeframe_units,
                                                  bool record_paths) {
    auto out = allocate(samples.size(), interventions, vois, timeframe_units, record_paths);
    for (std::size_t k = 0; k < samples.size(); ++k)
        evaluate_sample(plan, samples[k], k, interventions, vois, timeframe_units, out);
    return out;
}

std::vector<EffectMatrix> evaluate_effects_parallel(const CompilationPlan &plan,
                                                    std::span<const ParameterAssignment> samples,
                                                    const std::vector<InterventionSpec> &interventions,
                                                    const std::vector<std::string> &vois, int timeframe_units,
                                                    int threads, bool record_paths) {
    auto out = allocate(samples.size(), interventions, vois, timeframe_units, record_paths);
    const auto n = static_cast<std::int64_t>(samples.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_thread_count(threads))
    for (std::int64_t k = 0; k < n; ++k) {
        try {
            evaluate_sample(plan, samples[k], static_cast<std::size_t>(k), interventions, vois, timeframe_units, out);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

namespace {

std::vector<double> column_values(const EffectMatrix &m, std::size_t j, std::span<const std::uint32_t> rows) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (auto k : rows)
        if (!m.is_divergent(k, j)) values.push_back(m.effects(k, static_cast<Eigen::Index>(j)));
    return values;
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> rows(n);
    for (std::size_t k = 0; k < n; ++k) rows[k] = static_cast<std::uint32_t>(k);
    return rows;
}

void check_plan(const EffectMatrix &effects, const stats::BootstrapPlan &plan) {
    if (plan.rows() != effects.samples())
        throw Error(ErrorCode::ParameterMismatch, "bootstrap plan does not match the number of samples");
}

} // namespace

std::vector<RankingEntry> rank_interventions(const EffectMatrix &effects, const stats::BootstrapPlan &plan) {
    check_plan(effects, plan);
    const auto rows = all_rows(effects.samples());
    std::vector<RankingEntry> ranking;
    for (std::size_t j = 0; j < effects.columns(); ++j) {
        auto values = column_values(effects, j, rows);
        if (values.size() < 2)
            throw Error(ErrorCode::InsufficientSamples,
                        "intervention " + label(effects.interventions[j]) + " has fewer than 2 usable samples",
                        effects.interventions[j].target);
        RankingEntry entry;
        entry.intervention = effects.interventions[j];
        entry.samples = values.size();
        entry.median_effect = stats::median(values);
        entry.p025 = stats::percentile(values, 0.025);
        entry.p975 = stats::percentile(values, 0.975);

        std::vector<double> replicates;
        replicates.reserve(plan.size());
        for (std::size_t b = 0; b < plan.size(); ++b) {
            auto resampled = column_values(effects, j, plan.resample(b));
            if (!resampled.empty()) replicates.push_back(stats::median(std::move(resampled)));
        }
        const auto ci = replicates.empty() ? stats::Interval{entry.median_effect, entry.median_effect}
                                           : stats::percentile_interval(std::move(replicates));
        entry.ci_low = ci.low;
        entry.ci_high = ci.high;
        ranking.push_back(std::move(entry));
    }
    std::stable_sort(ranking.begin(), ranking.end(), [](const RankingEntry &a, const RankingEntry &b) {
        if (a.median_effect != b.median_effect) return a.median_effect > b.median_effect;
        if (a.intervention.target != b.intervention.target) return a.intervention.target < b.intervention.target;
        return a.intervention.direction > b.intervention.direction;
    });
    for (std::size_t r = 0; r < ranking.size(); ++r) ranking[r].rank = static_cast<int>(r + 1);
    return ranking;
}

std::vector<RankingEntry> rank_interventions(const EffectMatrix &effects, int bootstrap, std::uint64_t seed) {
    return rank_interventions(effects, stats::BootstrapPlan(effects.samples(), bootstrap, seed));
}

namespace {

struct PairCounts {
    std::size_t greater = 0, less = 0, ties = 0;
    std::size_t total() const { return greater + less + ties; }
};

PairCounts count_pairs(const EffectMatrix &m, std::size_t a, std::size_t b, std::span<const std::uint32_t> rows) {
    PairCounts c;
    for (auto k : rows) {
        if (m.is_divergent(k, a) || m.is_divergent(k, b)) continue;
        const double ea = m.effects(k, static_cast<Eigen::Index>(a));
        const double eb = m.effects(k, static_cast<Eigen::Index>(b));
        if (ea > eb) ++c.greater;
        else if (ea < eb) ++c.less;
        else ++c.ties;
    }
    return c;
}

} // namespace

DominanceMatrix pairwise_dominance(const EffectMatrix &effects, const stats::BootstrapPlan &plan) {
    check_plan(effects, plan);
    const std::size_t j = effects.columns();
    const auto rows = all_rows(effects.samples());
    DominanceMatrix out;
    out.interventions = effects.interventions;
    out.cells.resize(j * j);
    for (std::size_t a = 0; a < j; ++a) {
        for (std::size_t b = 0; b < j; ++b) {
            const auto c = count_pairs(effects, a, b, rows);
            if (c.total() < 2)
                throw Error(ErrorCode::InsufficientSamples,
                            "fewer than 2 paired samples for " + label(effects.interventions[a]) + " vs " +
                                label(effects.interventions[b]));
            DominanceRecord rec;
            rec.greater = c.greater;
            rec.less = c.less;
            rec.ties = c.ties;
            rec.samples = c.total();
            rec.fraction = static_cast<double>(c.greater) / static_cast<double>(c.total());
            rec.tie_fraction = static_cast<double>(c.ties) / static_cast<double>(c.total());
            std::vector<double> replicates;
            replicates.reserve(plan.size());
            for (std::size_t r = 0; r < plan.size(); ++r) {
                const auto rc = count_pairs(effects, a, b, plan.resample(r));
                if (rc.total() > 0)
                    replicates.push_back(static_cast<double>(rc.greater) / static_cast<double>(rc.total()));
            }
            const auto ci = replicates.empty() ? stats::Interval{rec.fraction, rec.fraction}
                                               : stats::percentile_interval(std::move(replicates));
            rec.ci_low = ci.low;
            rec.ci_high = ci.high;
            out.cells[a * j + b] = rec;
        }
    }
    return out;
}

DominanceMatrix pairwise_dominance(const EffectMatrix &effects, int bootstrap, std::uint64_t seed) {
    return pairwise_dominance(effects, stats::BootstrapPlan(effects.samples(), bootstrap, seed));
}

namespace {

struct ParameterColumn {
    std::string name;
    ParameterRef ref;
    std::vector<double> values; ///< per sample
};

std::vector<ParameterColumn> parameter_columns(const CausalLoopDiagram &cld,
                                               std::span<const ParameterAssignment> samples) {
    std::vector<ParameterColumn> cols;
    for (std::size_t i = 0; i < cld.links.size(); ++i) {
        ParameterColumn c{link_id(cld.links[i]), {ParameterRef::Kind::Link, i}, {}};
        for (const auto &s : samples) c.values.push_back(s.link_strengths.at(i));
        cols.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < cld.interactions.size(); ++i) {
        ParameterColumn c{interaction_id(cld.interactions[i]), {ParameterRef::Kind::Interaction, i}, {}};
        for (const auto &s : samples) c.values.push_back(s.interaction_strengths.at(i));
        cols.push_back(std::move(c));
    }
    return cols;
}

// (sample, column) cells selected by a list of rows under the given scope.
std::vector<std::pair<std::uint32_t, std::uint32_t>> select_cells(const EffectMatrix &m, SensitivityScope scope,
                                                                  std::span<const std::uint32_t> rows) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> cells;
    for (auto k : rows) {
        if (scope.pooled) {
            for (std::size_t j = 0; j < m.columns(); ++j)
                if (!m.is_divergent(k, j)) cells.emplace_back(k, static_cast<std::uint32_t>(j));
        } else if (!m.is_divergent(k, scope.intervention)) {
            cells.emplace_back(k, static_cast<std::uint32_t>(scope.intervention));
        }
    }
    return cells;
}

struct Selection {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> cells;
    std::vector<double> effect_ranks;
    bool effect_varies = false;
};

Selection make_selection(const EffectMatrix &m, SensitivityScope scope, std::span<const std::uint32_t> rows) {
    Selection sel;
    sel.cells = select_cells(m, scope, rows);
    std::vector<double> y;
    y.reserve(sel.cells.size());
    for (auto [k, j] : sel.cells) y.push_back(m.effects(k, j));
    sel.effect_varies = std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) != y.end();
    sel.effect_ranks = stats::average_ranks(y);
    return sel;
}

std::optional<double> correlate(const ParameterColumn &param, const Selection &sel) {
    if (!sel.effect_varies || sel.cells.size() < 2) return std::nullopt;
    std::vector<double> x;
    x.reserve(sel.cells.size());
    for (auto [k, j] : sel.cells) x.push_back(param.values[k]);
    return stats::pearson(stats::average_ranks(x), sel.effect_ranks);
}

} // namespace

std::vector<SensitivityEntry> sensitivity(const EffectMatrix &effects, std::span<const ParameterAssignment> samples,
                                          const CausalLoopDiagram &cld, SensitivityScope scope,
                                          const stats::BootstrapPlan &plan, Execution execution) {
    check_plan(effects, plan);
    if (samples.size() != effects.samples())
        throw Error(ErrorCode::ParameterMismatch, "parameter samples do not match the effect matrix");
    if (!scope.pooled && scope.intervention >= effects.columns())
        throw Error(ErrorCode::UnknownTarget, "sensitivity scope names an unknown intervention");

    const auto params = parameter_columns(cld, samples);
    const Selection full = make_selection(effects, scope, all_rows(effects.samples()));
    if (full.cells.size() < 2) throw Error(ErrorCode::InsufficientSamples, "fewer than 2 usable samples");
    std::vector<Selection> resampled;
    resampled.reserve(plan.size());
    for (std::size_t b = 0; b < plan.size(); ++b) resampled.push_back(make_selection(effects, scope, plan.resample(b)));

    const std::string scope_name = scope.pooled ? "pooled" : label(effects.interventions[scope.intervention]);
    std::vector<SensitivityEntry> out(params.size());
    const auto count = static_cast<std::int64_t>(params.size());
    auto compute = [&](std::int64_t p) {
        const auto &param = params[p];
        SensitivityEntry entry{param.name, param.ref, correlate(param, full), std::nullopt, std::nullopt, scope_name};
        if (entry.rho) {
            std::vector<double> replicates;
            replicates.reserve(resampled.size());
            for (const auto &sel : resampled)
                if (auto r = correlate(param, sel)) replicates.push_back(*r);
            if (!replicates.empty()) {
                const auto ci = stats::percentile_interval(std::move(replicates));
                entry.ci_low = ci.low;
                entry.ci_high = ci.high;
            }
        }
        out[p] = std::move(entry);
    };
    if (execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(resolve_thread_count(0))
        for (std::int64_t p = 0; p < count; ++p) compute(p);
    } else {
        for (std::int64_t p = 0; p < count; ++p) compute(p);
    }

    std::stable_sort(out.begin(), out.end(), [](const SensitivityEntry &a, const SensitivityEntry &b) {
        if (a.rho.has_value() != b.rho.has_value()) return a.rho.has_value();
        if (a.rho && b.rho && std::abs(*a.rho) != std::abs(*b.rho)) return std::abs(*a.rho) > std::abs(*b.rho);
        return a.parameter < b.parameter;
    });
    return out;
}

ExperimentResult run_experiment(const CausalLoopDiagram &cld, const ModelSettings &settings,
                                const ExperimentOptions &options) {
    check_settings(settings);
    const auto report = validate_structure(cld);
    if (!report.runnable()) {
        std::string codes;
        for (const auto &issue : report.issues)
            if (issue.severity == Severity::Error) codes += (codes.empty() ? "" : ", ") + issue.code;
        throw Error(ErrorCode::NotRunnable, "diagram has validation errors: " + codes);
    }
    const auto interventions = tagged_interventions(cld);
    if (interventions.empty()) throw Error(ErrorCode::NotRunnable, "no variable is tagged for intervention");
    const auto vois = variables_of_interest(cld);

    const CompilationPlan plan(cld);
    const auto n = static_cast<std::size_t>(settings.samples);
    std::vector<ParameterAssignment> samples(n);
    for (std::size_t k = 0; k < n; ++k) samples[k] = sample_parameters(cld, settings, k);

    auto effects = options.execution == Execution::Parallel
                       ? evaluate_effects_parallel(plan, samples, interventions, vois, settings.timeframe_units,
                                                   options.threads, options.record_paths)
                       : evaluate_effects_serial(plan, samples, interventions, vois, settings.timeframe_units,
                                                 options.record_paths);

    ExperimentResult result;
    result.settings = settings;
    result.total_runs = n * interventions.size();
    result.divergent_runs = effects.front().divergent_count();
    if (result.divergent_runs * 100 > result.total_runs)
        result.warnings.push_back({"DIVERGENT_RUNS", std::to_string(result.divergent_runs) + " of " +
                                                         std::to_string(result.total_runs) +
                                                         " runs diverged and were excluded; consider lower theta_max"});

    const stats::BootstrapPlan bplan(n, settings.bootstrap, bootstrap_seed(settings.seed));
    for (auto &matrix : effects) {
        VoiResult vr;
        try {
            vr.ranking = rank_interventions(matrix, bplan);
        } catch (const Error &e) {
            if (e.code() != ErrorCode::InsufficientSamples || result.divergent_runs == 0) throw;
            throw Error(e.code(), std::string(e.what()) + " (" + std::to_string(result.divergent_runs) + " of " +
                                      std::to_string(result.total_runs) + " runs diverged)",
                        e.location());
        }
        vr.pairwise = pairwise_dominance(matrix, bplan);
        vr.sensitivity_pooled = sensitivity(matrix, samples, cld, {true, 0}, bplan, options.execution);
        for (std::size_t j = 0; j < matrix.columns(); ++j)
            vr.sensitivity_per_intervention.push_back(
                sensitivity(matrix, samples, cld, {false, j}, bplan, options.execution));

        std::size_t implausible = 0;
        for (std::size_t k = 0; k < matrix.samples(); ++k)
            for (std::size_t j = 0; j < matrix.columns(); ++j)
                if (!matrix.is_divergent(k, j) &&
                    std::abs(matrix.effects(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))) >
                        kPlausibilityBound)
                    ++implausible;
        if (implausible > 0)
            result.warnings.push_back({"IMPLAUSIBLE_VOI", std::to_string(implausible) + " runs move '" + matrix.voi +
                                                              "' by more than 10 SD; consider lower theta_max"});
        if (vr.ranking.size() >= 2 && vr.ranking[0].ci_low <= vr.ranking[1].ci_high)
            result.warnings.push_back({"RANKING_UNSTABLE", "confidence intervals of the top two interventions for '" +
                                                               matrix.voi +
                                                               "' overlap; more samples may separate them"});
        for (const auto &entry : vr.sensitivity_pooled)
            if (!entry.rho)
                result.warnings.push_back({"ZERO_VARIANCE_PARAMETER",
                                           "correlation for '" + entry.parameter + "' on '" + matrix.voi +
                                               "' is undefined (no variance)"});
        vr.effects = std::move(matrix);
        result.vois.push_back(std::move(vr));
    }
    return result;
}

} // namespace d2d
