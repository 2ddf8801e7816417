#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "lsc/bernstein.hpp"
#include "lsc/corridor.hpp"

namespace lsc {

enum class RowKind { Velocity, Acceleration, Corridor, SafeCorridor };
inline constexpr int kRowKinds = 4;

/// minimize 1/2 x'Hx + f'x + constant  s.t.  A_eq x = b_eq,  A_in x <= b_in.
struct QpProblem {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    double constant = 0.0;
    Eigen::MatrixXd eq_matrix;
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd in_matrix;
    Eigen::VectorXd in_rhs;
    std::vector<RowKind> in_kinds;

    int dimension() const { return static_cast<int>(linear.size()); }
    double objective(const Eigen::VectorXd& x) const;
    /// Throws ArgumentError on inconsistent sizes or a non-symmetric Hessian.
    void validate() const;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit, Inaccurate };

const char* to_string(QpStatus status);

struct QpSolution {
    QpStatus status = QpStatus::Infeasible;
    Eigen::VectorXd values;
    double objective = 0.0;
    double max_equality_residual = 0.0;
    double max_inequality_violation = 0.0;
    double stationarity_residual = 0.0;  // relative KKT stationarity residual
    int iterations = 0;
    bool regularized = false;

    bool ok() const { return status == QpStatus::Optimal; }
};

struct SolveOptions {
    double tolerance = 1e-6;
    int max_iterations = 10000;
};

/// Dense strictly convex QP solver: equalities are eliminated through an
/// orthonormal null-space basis and the reduced problem is solved with the
/// Goldfarb-Idnani dual active-set method. Deterministic for fixed input.
QpSolution solve(const QpProblem& problem, const SolveOptions& options = {});

struct ResidualReport {
    double max_equality_residual = 0.0;
    double max_inequality_violation = 0.0;
    std::array<double, kRowKinds> max_violation_by_kind{};
    std::array<double, kRowKinds> min_slack_by_kind{};
    std::array<int, kRowKinds> rows_by_kind{};
};

/// Exact residuals of every row at `candidate`.
ResidualReport check_candidate(const QpProblem& problem, const Eigen::VectorXd& candidate);

// --- trajectory problem --------------------------------------------------

struct DynamicLimits {
    Vec3 max_velocity = Vec3::Constant(1.0);
    Vec3 max_acceleration = Vec3::Constant(2.0);
};

struct CostWeights {
    std::vector<double> goal;  // w_e per segment end; empty means 1 for all
    double jerk = 0.01;
};

struct InitialState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
};

/// Desired state at the start of a trajectory.
InitialState initial_state_of(const PiecewiseTrajectory& traj);

/// Decision-vector index of control point (m, l), coordinate `axis`.
inline int variable_index(int degree, int m, int l, int axis) { return 3 * (m * (degree + 1) + l) + axis; }

Eigen::VectorXd pack(const PiecewiseTrajectory& traj);
PiecewiseTrajectory unpack(const Eigen::VectorXd& x, const HorizonShape& shape, double start_time);

/// Gram matrix of the r-th derivatives of the degree-n Bernstein basis on [0, 1].
Eigen::MatrixXd derivative_gram(int degree, int order);

/// Builds the per-agent trajectory QP: goal-error plus jerk cost, initial
/// state / C2 continuity / static terminal segment equalities, per-axis
/// velocity and acceleration bounds on derivative control points, corridor
/// boxes, and linear safe corridor half-spaces.
QpProblem assemble(const HorizonShape& shape, const InitialState& start, const Vec3& goal,
                   const SfcSequence& sfc, const LscSet& lscs, const DynamicLimits& limits,
                   const CostWeights& weights);

}  // namespace lsc
