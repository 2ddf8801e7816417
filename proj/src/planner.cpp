#include "lsc/planner.hpp"

#include <chrono>
#include <limits>
#include <string>

namespace lsc {

namespace {

const AgentSnapshot& find_snapshot(std::span<const AgentSnapshot> snapshots, int id) {
    for (const auto& s : snapshots) {
        if (s.id == id) return s;
    }
    throw ArgumentError("no snapshot for agent " + std::to_string(id));
}

double current_time(const PlannerState& state) {
    if (!state.previous_trajectory) return state.start_time;
    return state.previous_trajectory->start_time() + state.previous_trajectory->segment_duration();
}

}  // namespace

std::vector<PiecewiseTrajectory> initial_trajectories(std::span<const AgentSnapshot> snapshots,
                                                      const HorizonShape& shape, double start_time) {
    std::vector<PiecewiseTrajectory> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) {
        out.push_back(shift_for_initial(s.previous_trajectory, s.current_position, shape, start_time));
    }
    return out;
}

StepResult plan_step(const PlannerState& state, std::span<const AgentSnapshot> snapshots,
                     const OccupancyGrid& grid) {
    const auto started = std::chrono::steady_clock::now();
    const PlannerParams& params = state.params;
    const HorizonShape& shape = params.shape;
    const AgentSnapshot& me = find_snapshot(snapshots, state.id);
    const double t_now = current_time(state);

    const PiecewiseTrajectory initial =
        shift_for_initial(state.previous_trajectory, me.current_position, shape, t_now);

    StepDiagnostics diag;
    GoalPlanContext ctx{state.id, snapshots, params.goal};
    try {
        diag.goal = plan_current_goal(ctx, grid);
    } catch (const GoalUnreachableError& e) {
        throw StepAbortError(e.what());
    }

    SfcSequence sfc;
    try {
        sfc = propagate_sfc(state.previous_sfc, initial, grid, state.radius, diag.goal.point);
    } catch (const InfeasibleSeedError& e) {
        throw StepAbortError("agent " + std::to_string(state.id) + ": " + e.what());
    }
    diag.sfc_containment = sfc_containment_violation(sfc, initial);

    diag.min_lsc_slack = std::numeric_limits<double>::infinity();
    diag.min_pair_clearance = std::numeric_limits<double>::infinity();
    for (const auto& other : snapshots) {
        if (other.id == me.id) continue;
        const PiecewiseTrajectory other_initial =
            shift_for_initial(other.previous_trajectory, other.current_position, shape, t_now);
        const EllipsoidModel model(state.radius + other.radius, params.downwash);
        // Always computed in (lower id, higher id) order so both agents of a pair
        // derive bit-identical mirrored constraints.
        const bool first = me.id < other.id;
        LscPair pair;
        try {
            pair = first ? build_lsc_pair(initial, other_initial, model, params.safety_buffer)
                         : build_lsc_pair(other_initial, initial, model, params.safety_buffer);
        } catch (const SafetyDegeneracyError& e) {
            throw StepAbortError("agent " + std::to_string(me.id) + " vs " + std::to_string(other.id) +
                                 ": " + e.what());
        }
        LscBlock block = first ? std::move(pair.for_first) : std::move(pair.for_second);
        block.neighbor_id = other.id;
        for (int m = 0; m < shape.segments; ++m) {
            diag.min_pair_clearance = std::min(diag.min_pair_clearance, pair.clearance[m]);
            if (pair.clearance[m] <= kDegeneracyEpsilon) continue;
            for (int l = 0; l <= shape.degree; ++l) {
                const Vec3& c = initial.segment(m).control_point(l);
                diag.min_lsc_slack = std::min(diag.min_lsc_slack, block.at(m, l).slack(c));
            }
        }
        diag.lscs.push_back(std::move(block));
    }

    const QpProblem qp = assemble(shape, initial_state_of(initial), diag.goal.point, sfc, diag.lscs,
                                  params.limits, params.weights);
    const Eigen::VectorXd candidate = pack(initial);
    diag.candidate_report = check_candidate(qp, candidate);
    diag.candidate_objective = qp.objective(candidate);

    const QpSolution solution = solve(qp, params.solver);
    diag.status = solution.status;
    diag.iterations = solution.iterations;

    StepResult result{initial, std::move(sfc), {}};
    if (solution.ok()) {
        result.trajectory = unpack(solution.values, shape, t_now);
        diag.objective = solution.objective;
    } else {
        diag.fallback = true;
        diag.objective = diag.candidate_objective;
    }
    diag.compute_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    result.diagnostics = std::move(diag);
    return result;
}

Disturbance detect_disturbance(const PlannerState& state, const Vec3& measured, double threshold,
                               double tolerance) {
    if (!state.previous_trajectory) return Disturbance::None;
    const Vec3 desired = eval(*state.previous_trajectory, current_time(state));
    const double offset = (measured - desired).norm();
    if (offset <= tolerance) return Disturbance::None;
    if (offset <= threshold) return Disturbance::Small;
    return Disturbance::Large;
}

}  // namespace lsc
