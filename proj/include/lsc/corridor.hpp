#pragma once

#include <optional>
#include <vector>

#include "lsc/bernstein.hpp"
#include "lsc/geometry.hpp"
#include "lsc/world.hpp"

namespace lsc {

/// One safe flight corridor box per trajectory segment.
struct SfcSequence {
    std::vector<AxisBox> boxes;
};

/// Corridor for the initial trajectory. Without a previous sequence every
/// box is grown from the terminal control point; otherwise boxes shift by
/// one segment and only the last box is rebuilt. With a `target`, growth
/// starts from the longest free box spanning the terminal control point and
/// a point on the way to the target, so corridors open toward the goal.
SfcSequence propagate_sfc(const std::optional<SfcSequence>& prev, const PiecewiseTrajectory& init_traj,
                          const OccupancyGrid& grid, double radius,
                          const std::optional<Vec3>& target = std::nullopt);

/// Bounding box of `from` and the farthest point toward `to` (bisection on
/// the fraction of the way) whose box with `from` is free.
AxisBox seed_box_toward(const OccupancyGrid& grid, const Vec3& from, const Vec3& to, double inflation);

/// Largest amount by which any control point of segment m leaves box m (0 if contained).
double sfc_containment_violation(const SfcSequence& sfc, const PiecewiseTrajectory& traj);

/// Half-spaces one agent must respect against one neighbor, row m*(n+1)+l.
struct LscBlock {
    int neighbor_id = -1;
    int degree = 0;
    std::vector<HalfSpaceConstraint> rows;

    int segments() const { return static_cast<int>(rows.size()) / (degree + 1); }
    const HalfSpaceConstraint& at(int m, int l) const { return rows.at(m * (degree + 1) + l); }
};

using LscSet = std::vector<LscBlock>;

struct LscPair {
    LscBlock for_first;
    LscBlock for_second;
    /// Per segment: distance between the relative control-point hull and the
    /// collision model, measured in the frame where the model is a sphere.
    std::vector<double> clearance;
};

/// Hull-vs-model distance below which no separating plane is trusted.
inline constexpr double kDegeneracyEpsilon = 1e-9;

/// Builds the mirrored pair of linear safe corridors for two initial
/// trajectories. The first agent gets normal n and anchor at the second
/// agent's control points; the second gets -n with identical margins.
/// Throws SafetyDegeneracyError when a relative hull penetrates the model.
LscPair build_lsc_pair(const PiecewiseTrajectory& init_first, const PiecewiseTrajectory& init_second,
                       const EllipsoidModel& model, double safety_buffer = 0.0);

}  // namespace lsc
