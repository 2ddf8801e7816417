#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lsc/bernstein.hpp"
#include "lsc/corridor.hpp"
#include "lsc/goalplan.hpp"
#include "lsc/qpsolve.hpp"
#include "lsc/world.hpp"

namespace lsc {

struct PlannerParams {
    HorizonShape shape;
    double downwash = 2.0;
    DynamicLimits limits;
    CostWeights weights;
    GoalPlanParams goal;
    double safety_buffer = 0.0;  // added to every LSC margin
    SolveOptions solver;
};

struct PlannerState {
    int id = 0;
    double radius = 0.15;
    std::optional<PiecewiseTrajectory> previous_trajectory;
    std::optional<SfcSequence> previous_sfc;
    PlannerParams params;
    double start_time = 0.0;  // T_0, used before the first plan exists
};

struct StepDiagnostics {
    ResidualReport candidate_report;      // initial trajectory against the step's QP
    double candidate_objective = 0.0;
    double sfc_containment = 0.0;         // initial control points outside their boxes
    double min_lsc_slack = 0.0;           // initial control points vs LSC, separated segments only
    double min_pair_clearance = 0.0;      // smallest relative-hull clearance over neighbors
    QpStatus status = QpStatus::Optimal;
    bool fallback = false;
    int iterations = 0;
    double objective = 0.0;
    CurrentGoal goal;
    LscSet lscs;
    double compute_ms = 0.0;
};

struct StepResult {
    PiecewiseTrajectory trajectory;
    SfcSequence sfc;
    StepDiagnostics diagnostics;
};

/// One replanning step for agent state.id: initial trajectory, corridor,
/// LSC against every other agent, current goal, QP. Falls back to the
/// initial trajectory when the solver does not certify a solution.
/// Sub-module premise violations surface as StepAbortError.
StepResult plan_step(const PlannerState& state, std::span<const AgentSnapshot> snapshots,
                     const OccupancyGrid& grid);

/// Initial trajectories of all agents at this step, in snapshot order.
std::vector<PiecewiseTrajectory> initial_trajectories(std::span<const AgentSnapshot> snapshots,
                                                      const HorizonShape& shape, double start_time);

enum class Disturbance { None, Small, Large };

/// Compares a measured position with the desired position at T_k. Offsets up
/// to `tolerance` are none, up to `threshold` small (the desired state is
/// still used), anything beyond is large.
Disturbance detect_disturbance(const PlannerState& state, const Vec3& measured, double threshold,
                               double tolerance = 1e-9);

}  // namespace lsc
