#include "d2d/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "d2d/error.hpp"

namespace d2d {

namespace {

using Eigen::MatrixXd;

constexpr std::array<double, 4> kPade3{120., 60., 12., 1.};
constexpr std::array<double, 6> kPade5{30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kPade7{17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
constexpr std::array<double, 10> kPade9{17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                        2162160.,     110880.,      3960.,        90.,         1.};
constexpr std::array<double, 14> kPade13{64764752532480000., 32382376266240000., 7771770303897600.,
                                         1187353796428800.,  129060195264000.,   10559470521600.,
                                         670442572800.,      33522128640.,       1323241920.,
                                         40840800.,          960960.,            16380.,
                                         182.,               1.};

// Largest 1-norm for which each degree meets unit roundoff (Higham 2005).
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

MatrixXd pade_quotient(const MatrixXd &u, const MatrixXd &v) {
    return (v - u).partialPivLu().solve(v + u);
}

template <std::size_t N>
MatrixXd pade_small(const MatrixXd &a, const std::array<double, N> &c) {
    const auto n = a.rows();
    const MatrixXd a2 = a * a;
    MatrixXd power = MatrixXd::Identity(n, n);
    MatrixXd u_inner = MatrixXd::Zero(n, n);
    MatrixXd v = MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k + 1 < N; k += 2) {
        v += c[k] * power;
        u_inner += c[k + 1] * power;
        power = power * a2;
    }
    return pade_quotient(a * u_inner, v);
}

MatrixXd pade13(const MatrixXd &a) {
    const auto &c = kPade13;
    const auto n = a.rows();
    const MatrixXd id = MatrixXd::Identity(n, n);
    const MatrixXd a2 = a * a, a4 = a2 * a2, a6 = a4 * a2;
    const MatrixXd u = a * (a6 * (c[13] * a6 + c[11] * a4 + c[9] * a2) + c[7] * a6 + c[5] * a4 + c[3] * a2 + c[1] * id);
    const MatrixXd v = a6 * (c[12] * a6 + c[10] * a4 + c[8] * a2) + c[6] * a6 + c[4] * a4 + c[2] * a2 + c[0] * id;
    return pade_quotient(u, v);
}

void check_finite(const Eigen::VectorXd &v, double time) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v(i)) || std::abs(v(i)) > kDivergenceThreshold)
            throw Error(ErrorCode::NonFiniteState, "state diverged at t = " + std::to_string(time));
}

Trajectory make_trajectory(const CompiledLinearSystem &system, int timeframe_units, int points_per_unit) {
    if (timeframe_units < 0) throw Error(ErrorCode::InvalidSettings, "timeframe must be non-negative");
    if (points_per_unit < 1) throw Error(ErrorCode::InvalidSettings, "points_per_unit must be positive");
    Trajectory traj;
    traj.state_names = system.state_names;
    traj.aux_names = system.aux_names;
    const int points = timeframe_units * points_per_unit + 1;
    for (int i = 0; i < points; ++i) traj.times.push_back(static_cast<double>(i) / points_per_unit);
    traj.values.resize(points, static_cast<Eigen::Index>(system.dimension()));
    traj.aux_values.resize(points, static_cast<Eigen::Index>(system.aux_names.size()));
    return traj;
}

void record(const CompiledLinearSystem &system, Trajectory &traj, int row, const Eigen::VectorXd &x) {
    check_finite(x, traj.times[row]);
    traj.values.row(row) = x.transpose();
    Eigen::VectorXd aux;
    system.evaluate(x, &aux, nullptr);
    check_finite(aux, traj.times[row]);
    traj.aux_values.row(row) = aux.transpose();
}

void check_x0(const CompiledLinearSystem &system, const Eigen::VectorXd &x0) {
    if (x0.size() != static_cast<Eigen::Index>(system.dimension()))
        throw Error(ErrorCode::ParameterMismatch, "initial state has the wrong dimension");
}

} // namespace

MatrixXd matrix_exponential(const MatrixXd &m) {
    if (m.rows() != m.cols()) throw Error(ErrorCode::NonFiniteInput, "matrix exponential needs a square matrix");
    if (!m.allFinite()) throw Error(ErrorCode::NonFiniteInput, "matrix exponential of a non-finite matrix");
    const auto n = m.rows();
    if (n == 0) return m;

    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
    MatrixXd result;
    if (norm <= kTheta3) {
        result = pade_small(m, kPade3);
    } else if (norm <= kTheta5) {
        result = pade_small(m, kPade5);
    } else if (norm <= kTheta7) {
        result = pade_small(m, kPade7);
    } else if (norm <= kTheta9) {
        result = pade_small(m, kPade9);
    } else {
        const int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
        result = pade13(m / std::ldexp(1.0, squarings));
        for (int i = 0; i < squarings; ++i) result = result * result;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        if (m.row(i).isZero(0.0)) {
            result.row(i).setZero();
            result(i, i) = 1.0;
        }
    }
    return result;
}

std::optional<Eigen::VectorXd> Trajectory::series(std::string_view name) const {
    if (auto it = std::find(state_names.begin(), state_names.end(), name); it != state_names.end())
        return values.col(it - state_names.begin());
    if (auto it = std::find(aux_names.begin(), aux_names.end(), name); it != aux_names.end())
        return aux_values.col(it - aux_names.begin());
    return std::nullopt;
}

std::optional<double> Trajectory::final_value(std::string_view name) const {
    auto s = series(name);
    if (!s || s->size() == 0) return std::nullopt;
    return (*s)(s->size() - 1);
}

Trajectory solve_linear(const CompiledLinearSystem &system, const Eigen::VectorXd &x0, int timeframe_units,
                        int points_per_unit) {
    if (system.nonlinear())
        throw Error(ErrorCode::ParameterMismatch, "solve_linear called on a system with interaction terms");
    check_x0(system, x0);
    Trajectory traj = make_trajectory(system, timeframe_units, points_per_unit);
    const auto dim = static_cast<Eigen::Index>(system.dimension());

    MatrixXd generator = MatrixXd::Zero(dim + 1, dim + 1);
    generator.topLeftCorner(dim, dim) = system.A;
    generator.topRightCorner(dim, 1) = system.b;
    const MatrixXd step = matrix_exponential(generator / static_cast<double>(points_per_unit));
    const MatrixXd flow = step.topLeftCorner(dim, dim);
    const Eigen::VectorXd shift = step.topRightCorner(dim, 1);

    Eigen::VectorXd x = x0;
    record(system, traj, 0, x);
    for (Eigen::Index row = 1; row < static_cast<Eigen::Index>(traj.times.size()); ++row) {
        x = flow * x + shift;
        record(system, traj, static_cast<int>(row), x);
    }
    return traj;
}

Trajectory solve_nonlinear(const CompiledLinearSystem &system, const Eigen::VectorXd &x0, int timeframe_units,
                           int substeps, int points_per_unit) {
    if (substeps < 1 || points_per_unit < 1 || substeps % points_per_unit != 0)
        throw Error(ErrorCode::InvalidSettings, "substeps must be a positive multiple of points_per_unit");
    check_x0(system, x0);
    Trajectory traj = make_trajectory(system, timeframe_units, points_per_unit);
    const double h = 1.0 / substeps;
    const int steps_per_point = substeps / points_per_unit;

    auto f = [&](const Eigen::VectorXd &x) {
        Eigen::VectorXd dx;
        system.evaluate(x, nullptr, &dx);
        return dx;
    };

    Eigen::VectorXd x = x0;
    record(system, traj, 0, x);
    for (Eigen::Index row = 1; row < static_cast<Eigen::Index>(traj.times.size()); ++row) {
        for (int s = 0; s < steps_per_point; ++s) {
            const Eigen::VectorXd k1 = f(x);
            const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
            const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
            const Eigen::VectorXd k4 = f(x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        record(system, traj, static_cast<int>(row), x);
    }
    return traj;
}

Trajectory solve(const CompiledLinearSystem &system, const Eigen::VectorXd &x0, int timeframe_units,
                 int points_per_unit) {
    if (system.nonlinear()) return solve_nonlinear(system, x0, timeframe_units, 20, points_per_unit);
    return solve_linear(system, x0, timeframe_units, points_per_unit);
}

} // namespace d2d
