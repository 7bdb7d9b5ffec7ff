#pragma once

#include <cstdint>
#include <string>

#include "d2d/cld.hpp"
#include "d2d/compile.hpp"

namespace d2d {

struct ModelSettings {
    std::string base_time_unit_label = "base time unit";
    int timeframe_units = 20;      ///< horizon in base time units, >= 2
    double theta_max_stock = 0.1;  ///< per base time unit, standardized
    double theta_max_aux = 0.3;    ///< unitless, standardized
    int samples = 100;
    std::uint64_t seed = 0;
    int bootstrap = 200;           ///< resamples for every confidence interval

    friend bool operator==(const ModelSettings &, const ModelSettings &) = default;
};

/// Throws Error(InvalidSettings) naming the first offending field.
void check_settings(const ModelSettings &settings);

/// Independent uniform draw per link and interaction, bounded by polarity and by
/// the target's kind: links into stocks use theta_max_stock, links into
/// auxiliaries theta_max_aux; interaction terms use half those widths.
/// Intercepts are zero. Each value depends only on (seed, sample_index, identity).
ParameterAssignment sample_parameters(const CausalLoopDiagram &cld, const ModelSettings &settings,
                                      std::uint64_t sample_index);

/// Expected total VOI change (in SD) spread over the base time units of the timeframe.
double theta_max_heuristic(double expected_total_voi_change_sd, int timeframe_units);

} // namespace d2d
