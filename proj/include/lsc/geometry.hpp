#pragma once

#include <span>
#include <vector>

#include "lsc/common.hpp"

namespace lsc {

/// Inter-agent collision set {x : |E x| <= radius_sum}, E = diag(1, 1, 1/downwash).
struct EllipsoidModel {
    double radius_sum;
    double downwash = 1.0;

    EllipsoidModel(double radius_sum, double downwash = 1.0);

    /// E x
    Vec3 scale(const Vec3& x) const { return {x.x(), x.y(), x.z() / downwash}; }
    /// E^{-1} x
    Vec3 unscale(const Vec3& x) const { return {x.x(), x.y(), x.z() * downwash}; }
    /// |E x|, the distance used to judge collisions.
    double scaled_norm(const Vec3& x) const { return scale(x).norm(); }
};

/// Closed half-space {x : (x - anchor) . normal - margin >= 0}.
struct HalfSpaceConstraint {
    Vec3 normal;
    Vec3 anchor;
    double margin;

    double slack(const Vec3& x) const { return (x - anchor).dot(normal) - margin; }
};

/// max over the collision set of x . n.
double support(const EllipsoidModel& model, const Vec3& n);

std::vector<Vec3> to_sphere_frame(std::span<const Vec3> points, const EllipsoidModel& model);
std::vector<Vec3> from_sphere_frame(std::span<const Vec3> points, const EllipsoidModel& model);

struct ClosestPoint {
    Vec3 witness;
    double distance;
};

/// Closest point of the convex hull of `points` to the origin (GJK with an
/// exhaustive sub-simplex distance routine). Distance 0 with witness 0 when
/// the origin lies in the hull.
ClosestPoint closest_point_to_origin(std::span<const Vec3> points);

}  // namespace lsc
