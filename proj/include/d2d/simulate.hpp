#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "d2d/compile.hpp"

namespace d2d {

/// Values beyond this magnitude mark a run as divergent.
inline constexpr double kDivergenceThreshold = 1e15;
/// |VOI| above this (in SD) triggers a plausibility warning, not censoring.
inline constexpr double kPlausibilityBound = 10.0;

/// e^M by scaling and squaring with a diagonal Pade approximant (degree 3..13,
/// chosen from the 1-norm). Zero rows of M give identity rows exactly.
/// Throws Error(NonFiniteInput).
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd &m);

struct Trajectory {
    std::vector<std::string> state_names;
    std::vector<std::string> aux_names;
    std::vector<double> times;   ///< in base time units
    Eigen::MatrixXd values;      ///< times x states
    Eigen::MatrixXd aux_values;  ///< times x auxiliaries

    /// Time course of any state or auxiliary by name.
    std::optional<Eigen::VectorXd> series(std::string_view name) const;
    std::optional<double> final_value(std::string_view name) const;
};

/// x(t) = e^{At} x0 + (e^{At} - I) A^{-1} b, evaluated without inverting A:
/// the affine flow over one reporting step is the exponential of the augmented
/// generator [[A, b], [0, 0]], applied repeatedly. Exact for singular A.
/// Throws Error(NonFiniteState) past kDivergenceThreshold.
Trajectory solve_linear(const CompiledLinearSystem &system, const Eigen::VectorXd &x0, int timeframe_units,
                        int points_per_unit = 1);

/// Classic fixed-step RK4 with step 1/substeps base time units.
/// substeps must be a positive multiple of points_per_unit.
Trajectory solve_nonlinear(const CompiledLinearSystem &system, const Eigen::VectorXd &x0, int timeframe_units,
                           int substeps = 20, int points_per_unit = 1);

/// Matrix exponential for linear systems, RK4 otherwise.
Trajectory solve(const CompiledLinearSystem &system, const Eigen::VectorXd &x0, int timeframe_units,
                 int points_per_unit = 1);

} // namespace d2d
