#include "lsc/goalplan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lsc {

AgentSnapshot make_snapshot(int id, double radius, const Vec3& goal,
                            const std::optional<PiecewiseTrajectory>& prev, const Vec3& current_position) {
    AgentSnapshot s;
    s.id = id;
    s.radius = radius;
    s.goal = goal;
    s.previous_trajectory = prev;
    if (prev) {
        s.current_position = eval(*prev, prev->start_time() + prev->segment_duration());
        s.horizon_end_position = prev->terminal_point();
    } else {
        s.current_position = current_position;
        s.horizon_end_position = current_position;
    }
    return s;
}

const AgentSnapshot& GoalPlanContext::self() const {
    for (const auto& s : snapshots) {
        if (s.id == self_id) return s;
    }
    throw ArgumentError("no snapshot for agent " + std::to_string(self_id));
}

std::vector<int> higher_priority_set(const GoalPlanContext& ctx) {
    const AgentSnapshot& me = ctx.self();
    const double my_dist = (me.current_position - me.goal).norm();
    const double d_g = ctx.params.goal_threshold;
    const bool me_reached = my_dist < d_g;

    std::vector<int> out;
    for (const auto& other : ctx.snapshots) {
        if (other.id == me.id) continue;
        const double dist = (other.current_position - other.goal).norm();
        const bool closer = dist < my_dist || (dist == my_dist && other.id < me.id);
        const bool active = dist > d_g;
        const bool approaching = (other.horizon_end_position - other.current_position)
                                     .dot(me.current_position - other.current_position) > 0.0;
        if ((closer && active && approaching) || (me_reached && active)) out.push_back(other.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

CurrentGoal plan_current_goal(const GoalPlanContext& ctx, const OccupancyGrid& grid) {
    const AgentSnapshot& me = ctx.self();
    CurrentGoal result{me.current_position, GoalBranch::Hold, higher_priority_set(ctx)};

    std::vector<AgentObstacle> obstacles;
    const AgentSnapshot* nearest = nullptr;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (const auto& other : ctx.snapshots) {
        if (!std::binary_search(result.higher_priority.begin(), result.higher_priority.end(), other.id)) {
            continue;
        }
        obstacles.push_back({other.current_position, other.radius});
        const double d = (me.current_position - other.current_position).norm();
        if (d < nearest_dist || (d == nearest_dist && nearest && other.id < nearest->id)) {
            nearest_dist = d;
            nearest = &other;
        }
    }

    if (nearest && nearest_dist < ctx.params.repulsion_threshold) {
        Vec3 away = me.current_position - nearest->current_position;
        if (away.head<2>().norm() < 1e-6) {
            away = Vec3::UnitX();  // vertically stacked: push sideways
        } else {
            away.normalize();
        }
        result.point = nearest->current_position + ctx.params.repulsion_distance * away;
        result.branch = GoalBranch::Repulsion;
        return result;
    }

    // Paths that graze inflated obstacles leave no room for line-of-sight
    // shortcuts, so search with half a voxel of extra clearance first.
    const double padded = me.radius + 0.5 * grid.resolution();
    auto search = [&](std::span<const AgentObstacle> agents) {
        auto found = astar(grid, me.current_position, me.goal, padded, agents);
        return found ? found : astar(grid, me.current_position, me.goal, me.radius, agents);
    };
    std::optional<GridPath> path = search(obstacles);
    GoalBranch branch = GoalBranch::Path;
    if (!path) {
        path = search({});
        branch = GoalBranch::PathIgnoringAgents;
    }
    if (!path) {
        throw GoalUnreachableError("no grid path from agent " + std::to_string(me.id) + " to its goal");
    }

    std::vector<Vec3> candidates = path->waypoints;
    if (candidates.empty() || candidates.back() != me.goal) candidates.push_back(me.goal);
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        if (line_of_sight_free(grid, me.current_position, *it, me.radius, obstacles,
                               ctx.params.downwash)) {
            result.point = *it;
            result.branch = branch;
            return result;
        }
    }
    return result;  // hold position
}

}  // namespace lsc
