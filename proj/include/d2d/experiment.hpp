#pragma once

// Intervention experiments: every tagged intervention is simulated under the
// same N parameter draws, then effects on each VOI are ranked, compared pairwise
// and related back to the parameters.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "d2d/cld.hpp"
#include "d2d/compile.hpp"
#include "d2d/sampling.hpp"
#include "d2d/stats.hpp"

namespace d2d {

/// Effect of each intervention (columns) under each parameter sample (rows) on
/// one VOI. All columns share the same samples.
struct EffectMatrix {
    std::vector<InterventionSpec> interventions;
    std::string voi;
    Eigen::MatrixXd effects;              ///< samples x interventions
    std::vector<std::uint8_t> divergent;  ///< row-major, 1 = run hit NON_FINITE_STATE
    /// Optional VOI time courses, one row per (sample, intervention) in
    /// row-major order; empty unless requested.
    Eigen::MatrixXd paths;

    std::size_t samples() const { return static_cast<std::size_t>(effects.rows()); }
    std::size_t columns() const { return static_cast<std::size_t>(effects.cols()); }
    bool is_divergent(std::size_t k, std::size_t j) const { return divergent[k * columns() + j] != 0; }
    std::size_t divergent_count() const;
};

struct RankingEntry {
    InterventionSpec intervention;
    double median_effect = 0.0;
    double ci_low = 0.0, ci_high = 0.0; ///< bootstrap CI of the median
    double p025 = 0.0, p975 = 0.0;      ///< spread of the effect distribution itself
    std::size_t samples = 0;            ///< non-divergent samples used
    int rank = 0;
};

struct DominanceRecord {
    std::size_t greater = 0, less = 0, ties = 0, samples = 0;
    double fraction = 0.0; ///< greater / samples
    double tie_fraction = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
};

/// Entry (a, b) is the share of paired samples where intervention a's effect
/// strictly exceeds b's.
struct DominanceMatrix {
    std::vector<InterventionSpec> interventions;
    std::vector<DominanceRecord> cells; ///< row-major

    const DominanceRecord &at(std::size_t a, std::size_t b) const { return cells[a * interventions.size() + b]; }
};

struct SensitivityEntry {
    std::string parameter;
    ParameterRef ref;
    std::optional<double> rho; ///< nullopt: zero variance, correlation undefined
    std::optional<double> ci_low, ci_high;
    std::string scope;         ///< "pooled" or the intervention label
};

struct SensitivityScope {
    bool pooled = true;
    std::size_t intervention = 0; ///< column, when not pooled
};

struct ExperimentWarning {
    std::string code;
    std::string message;
};

struct VoiResult {
    EffectMatrix effects;
    std::vector<RankingEntry> ranking;
    DominanceMatrix pairwise;
    std::vector<SensitivityEntry> sensitivity_pooled;
    std::vector<std::vector<SensitivityEntry>> sensitivity_per_intervention; ///< by column
};

struct ExperimentResult {
    ModelSettings settings;
    std::vector<VoiResult> vois;
    std::vector<ExperimentWarning> warnings;
    std::size_t total_runs = 0;
    std::size_t divergent_runs = 0;

    const VoiResult *voi(std::string_view name) const;
};

enum class Execution { Parallel, Sequential };

struct ExperimentOptions {
    Execution execution = Execution::Parallel;
    int threads = 0; ///< 0: OpenMP default; always capped by D2D_THREADS
    bool record_paths = false;
};

/// Thread count after applying the D2D_THREADS cap.
int resolve_thread_count(int requested);

/// Variables tagged for intervention, declaration order.
std::vector<InterventionSpec> tagged_interventions(const CausalLoopDiagram &cld);
std::vector<std::string> variables_of_interest(const CausalLoopDiagram &cld);

/// Effect kernels. Both fill one EffectMatrix per VOI with the final VOI value of
/// every (sample, intervention) run; divergent runs are masked with effect 0.
/// The parallel kernel distributes samples over OpenMP threads and must agree
/// bit for bit with the serial reference.
std::vector<EffectMatrix> evaluate_effects_serial(const CompilationPlan &plan,
                                                  std::span<const ParameterAssignment> samples,
                                                  const std::vector<InterventionSpec> &interventions,
                                                  const std::vector<std::string> &vois, int timeframe_units,
                                                  bool record_paths = false);
std::vector<EffectMatrix> evaluate_effects_parallel(const CompilationPlan &plan,
                                                    std::span<const ParameterAssignment> samples,
                                                    const std::vector<InterventionSpec> &interventions,
                                                    const std::vector<std::string> &vois, int timeframe_units,
                                                    int threads, bool record_paths = false);

/// Median effect per intervention with bootstrap CIs, sorted by descending
/// median (ties by name). Throws Error(InsufficientSamples) below two
/// non-divergent samples for any intervention.
std::vector<RankingEntry> rank_interventions(const EffectMatrix &effects, const stats::BootstrapPlan &plan);
std::vector<RankingEntry> rank_interventions(const EffectMatrix &effects, int bootstrap, std::uint64_t seed);

DominanceMatrix pairwise_dominance(const EffectMatrix &effects, const stats::BootstrapPlan &plan);
DominanceMatrix pairwise_dominance(const EffectMatrix &effects, int bootstrap, std::uint64_t seed);

/// Spearman correlation between every link/interaction strength and the
/// effects, sorted by |rho| descending (undefined entries last). Pooled scope
/// stacks every (sample, intervention) pair.
std::vector<SensitivityEntry> sensitivity(const EffectMatrix &effects, std::span<const ParameterAssignment> samples,
                                          const CausalLoopDiagram &cld, SensitivityScope scope,
                                          const stats::BootstrapPlan &plan,
                                          Execution execution = Execution::Parallel);

/// Full pipeline. Throws Error(NotRunnable) when validation fails or nothing is
/// tagged, Error(InvalidSettings) for bad settings.
ExperimentResult run_experiment(const CausalLoopDiagram &cld, const ModelSettings &settings,
                                const ExperimentOptions &options = {});

/// Seed of the bootstrap plan derived from the model seed.
std::uint64_t bootstrap_seed(std::uint64_t seed);

} // namespace d2d
