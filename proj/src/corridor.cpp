#include "lsc/corridor.hpp"

#include <algorithm>
#include <string>

namespace lsc {

AxisBox seed_box_toward(const OccupancyGrid& grid, const Vec3& from, const Vec3& to, double inflation) {
    auto span = [&](double s) {
        const Vec3 p = from + s * (to - from);
        return AxisBox{from.cwiseMin(p), from.cwiseMax(p)};
    };
    if (!box_is_free(grid, span(0.0), inflation)) {
        throw InfeasibleSeedError("corridor seed is not free under the agent radius");
    }
    if (box_is_free(grid, span(1.0), inflation)) return span(1.0);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        (box_is_free(grid, span(mid), inflation) ? lo : hi) = mid;
    }
    return span(lo);
}

SfcSequence propagate_sfc(const std::optional<SfcSequence>& prev, const PiecewiseTrajectory& init_traj,
                          const OccupancyGrid& grid, double radius, const std::optional<Vec3>& target) {
    const int M = init_traj.num_segments();
    const Vec3& seed = init_traj.terminal_point();
    const AxisBox last = target ? build_sfc(grid, seed_box_toward(grid, seed, *target, radius), radius)
                                : build_sfc(grid, seed, radius);
    SfcSequence out;
    if (!prev) {
        out.boxes.assign(M, last);
        return out;
    }
    if (static_cast<int>(prev->boxes.size()) != M) {
        throw ArgumentError("previous corridor has " + std::to_string(prev->boxes.size()) +
                            " boxes, expected " + std::to_string(M));
    }
    out.boxes.assign(prev->boxes.begin() + 1, prev->boxes.end());
    out.boxes.push_back(last);
    return out;
}

double sfc_containment_violation(const SfcSequence& sfc, const PiecewiseTrajectory& traj) {
    double worst = 0.0;
    for (int m = 0; m < traj.num_segments(); ++m) {
        const AxisBox& box = sfc.boxes.at(m);
        for (const auto& c : traj.segment(m).control_points()) {
            worst = std::max(worst, (box.min_corner - c).maxCoeff());
            worst = std::max(worst, (c - box.max_corner).maxCoeff());
        }
    }
    return worst;
}

LscPair build_lsc_pair(const PiecewiseTrajectory& init_first, const PiecewiseTrajectory& init_second,
                       const EllipsoidModel& model, double safety_buffer) {
    const int M = init_first.num_segments();
    const int n = init_first.degree();
    if (init_second.num_segments() != M || init_second.degree() != n) {
        throw ArgumentError("initial trajectories differ in shape");
    }
    LscPair pair;
    pair.for_first.degree = n;
    pair.for_second.degree = n;
    pair.for_first.rows.reserve(M * (n + 1));
    pair.for_second.rows.reserve(M * (n + 1));
    pair.clearance.reserve(M);

    std::vector<Vec3> diff(n + 1);
    for (int m = 0; m < M; ++m) {
        const auto& ci = init_first.segment(m).control_points();
        const auto& cj = init_second.segment(m).control_points();
        for (int l = 0; l <= n; ++l) diff[l] = ci[l] - cj[l];

        const std::vector<Vec3> sphere = to_sphere_frame(diff, model);
        const ClosestPoint closest = closest_point_to_origin(sphere);
        const double clearance = closest.distance - model.radius_sum;
        if (closest.distance <= kDegeneracyEpsilon || clearance < -kDegeneracyEpsilon) {
            throw SafetyDegeneracyError("relative control-point hull meets the collision model (segment " +
                                        std::to_string(m) + ", clearance " + std::to_string(clearance) +
                                        ")");
        }
        pair.clearance.push_back(clearance);

        // Sphere-frame separating direction mapped back through E (n . x = n_s . E x).
        const Vec3 sphere_normal = closest.witness / closest.distance;
        const Vec3 normal = model.scale(sphere_normal).normalized();
        const double model_support = support(model, normal);
        for (int l = 0; l <= n; ++l) {
            const double margin = 0.5 * (model_support + diff[l].dot(normal)) + safety_buffer;
            pair.for_first.rows.push_back({normal, cj[l], margin});
            pair.for_second.rows.push_back({-normal, ci[l], margin});
        }
    }
    return pair;
}

}  // namespace lsc
