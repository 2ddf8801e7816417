#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lsc/bernstein.hpp"
#include "lsc/world.hpp"

namespace lsc {

/// Everything agents exchange at a replanning step.
struct AgentSnapshot {
    int id = 0;
    double radius = 0.15;
    Vec3 current_position = Vec3::Zero();       // initial trajectory at T_k
    Vec3 horizon_end_position = Vec3::Zero();   // initial trajectory at T_{k+M}
    Vec3 goal = Vec3::Zero();
    std::optional<PiecewiseTrajectory> previous_trajectory;
};

/// Snapshot of an agent whose last plan was `prev` (none before the first step).
AgentSnapshot make_snapshot(int id, double radius, const Vec3& goal,
                            const std::optional<PiecewiseTrajectory>& prev, const Vec3& current_position);

struct GoalPlanParams {
    double goal_threshold = 0.1;       // d_g
    double repulsion_threshold = 0.4;  // d_th
    double repulsion_distance = 0.5;   // d_rep
    double downwash = 2.0;             // used by line-of-sight checks against agents
};

struct GoalPlanContext {
    int self_id = 0;
    std::span<const AgentSnapshot> snapshots;
    GoalPlanParams params;

    const AgentSnapshot& self() const;
};

/// Ids (ascending) of the agents that agent self_id yields to.
std::vector<int> higher_priority_set(const GoalPlanContext& ctx);

enum class GoalBranch { Repulsion, Path, PathIgnoringAgents, Hold };

struct CurrentGoal {
    Vec3 point;
    GoalBranch branch;
    std::vector<int> higher_priority;
};

/// Priority-based current goal: repel from a too-close higher-priority agent,
/// otherwise follow the farthest line-of-sight-free waypoint of a grid path
/// that detours higher-priority agents. Throws GoalUnreachableError when no
/// grid path exists even without agent obstacles.
CurrentGoal plan_current_goal(const GoalPlanContext& ctx, const OccupancyGrid& grid);

}  // namespace lsc
