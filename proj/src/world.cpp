#include "lsc/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

namespace lsc {

namespace {

// Index computations snap values within this many voxels of a grid line onto it.
constexpr double kIndexTolerance = 1e-9;
// Bounds comparisons tolerate this much round-off, in meters.
constexpr double kBoundsTolerance = 1e-9;

Vec3 vec_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

AxisBox box_from_json(const nlohmann::json& j) {
    if (!j.contains("min") || !j.contains("max")) throw FormatError("box needs min and max");
    AxisBox box{vec_from_json(j.at("min")), vec_from_json(j.at("max"))};
    if ((box.min_corner.array() > box.max_corner.array()).any()) {
        throw FormatError("box min exceeds max");
    }
    return box;
}

}  // namespace

OccupancyGrid::OccupancyGrid(double resolution, AxisBox bounds, std::vector<AxisBox> obstacles)
    : resolution_(resolution), bounds_(std::move(bounds)), obstacles_(std::move(obstacles)) {
    if (!(resolution_ > 0.0)) throw ArgumentError("grid resolution must be positive");
    if ((bounds_.max_corner.array() <= bounds_.min_corner.array()).any()) {
        throw ArgumentError("grid bounds must be nonempty");
    }
    for (int a = 0; a < 3; ++a) {
        const double cells = (bounds_.max_corner[a] - bounds_.min_corner[a]) / resolution_;
        dims_[a] = std::max(1, static_cast<int>(std::ceil(cells - kIndexTolerance)));
    }
    occupied_.assign(static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z(), 0);

    for (const auto& box : obstacles_) {
        if ((box.min_corner.array() > box.max_corner.array()).any()) {
            throw ArgumentError("obstacle box min exceeds max");
        }
        // closed cell [a, a+res] meets [lo, hi]  <=>  a <= hi and a + res >= lo
        VoxelIndex lo, hi;
        for (int a = 0; a < 3; ++a) {
            const double rel_lo = (box.min_corner[a] - bounds_.min_corner[a]) / resolution_;
            const double rel_hi = (box.max_corner[a] - bounds_.min_corner[a]) / resolution_;
            lo[a] = std::max(0, static_cast<int>(std::ceil(rel_lo - 1.0 - kIndexTolerance)));
            hi[a] = std::min(dims_[a] - 1, static_cast<int>(std::floor(rel_hi + kIndexTolerance)));
        }
        for (int x = lo.x(); x <= hi.x(); ++x)
            for (int y = lo.y(); y <= hi.y(); ++y)
                for (int z = lo.z(); z <= hi.z(); ++z) occupied_[linear({x, y, z})] = 1;
    }

    const int px = dims_.x() + 1, py = dims_.y() + 1, pz = dims_.z() + 1;
    prefix_.assign(static_cast<std::size_t>(px) * py * pz, 0);
    auto at = [&](int x, int y, int z) -> std::int32_t& {
        return prefix_[(static_cast<std::size_t>(x) * py + y) * pz + z];
    };
    for (int x = 1; x < px; ++x)
        for (int y = 1; y < py; ++y)
            for (int z = 1; z < pz; ++z) {
                at(x, y, z) = occupied_[linear({x - 1, y - 1, z - 1})] + at(x - 1, y, z) +
                              at(x, y - 1, z) + at(x, y, z - 1) - at(x - 1, y - 1, z) -
                              at(x - 1, y, z - 1) - at(x, y - 1, z - 1) + at(x - 1, y - 1, z - 1);
            }
}

OccupancyGrid OccupancyGrid::from_json(const nlohmann::json& j) {
    try {
        const double resolution = j.value("resolution", 0.1);
        const AxisBox bounds = box_from_json(j.at("bounds"));
        std::vector<AxisBox> boxes;
        if (j.contains("boxes")) {
            for (const auto& b : j.at("boxes")) boxes.push_back(box_from_json(b));
        }
        return OccupancyGrid(resolution, bounds, std::move(boxes));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed map: ") + e.what());
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("invalid map: ") + e.what());
    }
}

OccupancyGrid OccupancyGrid::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open map file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("map file " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json OccupancyGrid::to_json() const {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : obstacles_) {
        boxes.push_back({{"min", vec_to_json(b.min_corner)}, {"max", vec_to_json(b.max_corner)}});
    }
    return {{"resolution", resolution_},
            {"bounds", {{"min", vec_to_json(bounds_.min_corner)}, {"max", vec_to_json(bounds_.max_corner)}}},
            {"boxes", boxes}};
}

VoxelIndex OccupancyGrid::voxel_of(const Vec3& p) const {
    VoxelIndex v;
    for (int a = 0; a < 3; ++a) {
        const int i = static_cast<int>(std::floor((p[a] - bounds_.min_corner[a]) / resolution_));
        v[a] = std::clamp(i, 0, dims_[a] - 1);
    }
    return v;
}

Vec3 OccupancyGrid::voxel_center(const VoxelIndex& v) const {
    return bounds_.min_corner + (v.cast<double>().array() + 0.5).matrix() * resolution_;
}

long OccupancyGrid::count_occupied(VoxelIndex lo, VoxelIndex hi) const {
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(lo[a], 0);
        hi[a] = std::min(hi[a], dims_[a] - 1);
        if (lo[a] > hi[a]) return 0;
    }
    const int py = dims_.y() + 1, pz = dims_.z() + 1;
    auto at = [&](int x, int y, int z) -> long {
        return prefix_[(static_cast<std::size_t>(x) * py + y) * pz + z];
    };
    const int x0 = lo.x(), y0 = lo.y(), z0 = lo.z();
    const int x1 = hi.x() + 1, y1 = hi.y() + 1, z1 = hi.z() + 1;
    return at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) + at(x0, y0, z1) +
           at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
}

bool box_is_free(const OccupancyGrid& grid, const AxisBox& box, double inflation) {
    if (inflation < 0.0) throw ArgumentError("inflation must be non-negative");
    const Vec3 lo = box.min_corner.array() - inflation;
    const Vec3 hi = box.max_corner.array() + inflation;
    const AxisBox& bounds = grid.bounds();
    if ((lo.array() < bounds.min_corner.array() - kBoundsTolerance).any() ||
        (hi.array() > bounds.max_corner.array() + kBoundsTolerance).any()) {
        return false;
    }
    // voxel i overlaps the open box  <=>  a_i < hi and a_i + res > lo
    VoxelIndex ilo, ihi;
    const double res = grid.resolution();
    for (int a = 0; a < 3; ++a) {
        const double rel_lo = (lo[a] - bounds.min_corner[a]) / res;
        const double rel_hi = (hi[a] - bounds.min_corner[a]) / res;
        ilo[a] = static_cast<int>(std::floor(rel_lo + kIndexTolerance));
        ihi[a] = static_cast<int>(std::ceil(rel_hi - kIndexTolerance)) - 1;
        if (ilo[a] > ihi[a]) return true;  // degenerate slab lying on a grid plane
    }
    return grid.count_occupied(ilo, ihi) == 0;
}

AxisBox build_sfc(const OccupancyGrid& grid, const Vec3& seed, double inflation) {
    return build_sfc(grid, AxisBox{seed, seed}, inflation);
}

AxisBox build_sfc(const OccupancyGrid& grid, const AxisBox& seed, double inflation) {
    AxisBox box = seed;
    if (!box_is_free(grid, box, inflation)) {
        throw InfeasibleSeedError("corridor seed is not free under the agent radius");
    }
    const double res = grid.resolution();
    const AxisBox& bounds = grid.bounds();
    std::array<bool, 6> blocked{};

    auto slab_for = [&](int axis, bool positive, double from, double to) {
        AxisBox slab = box;
        slab.min_corner[axis] = positive ? from : to;
        slab.max_corner[axis] = positive ? to : from;
        return slab;
    };

    while (!std::all_of(blocked.begin(), blocked.end(), [](bool b) { return b; })) {
        for (int dir = 0; dir < 6; ++dir) {
            if (blocked[dir]) continue;
            const int axis = dir / 2;
            const bool positive = dir % 2 == 0;
            const double face = positive ? box.max_corner[axis] : box.min_corner[axis];
            const double limit = positive ? bounds.max_corner[axis] - inflation
                                          : bounds.min_corner[axis] + inflation;
            if (positive ? face >= limit : face <= limit) {
                blocked[dir] = true;
                continue;
            }
            const double target = positive ? std::min(face + res, limit) : std::max(face - res, limit);
            if (box_is_free(grid, slab_for(axis, positive, face, target), inflation)) {
                (positive ? box.max_corner : box.min_corner)[axis] = target;
                if (target == limit) blocked[dir] = true;
                continue;
            }

            // Blocked inside this layer: advance exactly to the nearest obstacle face.
            blocked[dir] = true;
            const AxisBox slab = slab_for(axis, positive, face, target);
            VoxelIndex lo, hi;
            for (int a = 0; a < 3; ++a) {
                lo[a] = static_cast<int>(std::floor(
                    (slab.min_corner[a] - inflation - bounds.min_corner[a]) / res + kIndexTolerance));
                hi[a] = static_cast<int>(std::ceil(
                            (slab.max_corner[a] + inflation - bounds.min_corner[a]) / res -
                            kIndexTolerance)) - 1;
                lo[a] = std::max(lo[a], 0);
                hi[a] = std::min(hi[a], grid.dims()[a] - 1);
            }
            double reach = target;
            for (int x = lo.x(); x <= hi.x(); ++x)
                for (int y = lo.y(); y <= hi.y(); ++y)
                    for (int z = lo.z(); z <= hi.z(); ++z) {
                        const VoxelIndex v{x, y, z};
                        if (!grid.occupied(v)) continue;
                        const double cell_lo = bounds.min_corner[axis] + v[axis] * res;
                        reach = positive ? std::min(reach, cell_lo - inflation)
                                         : std::max(reach, cell_lo + res + inflation);
                    }
            if (positive ? reach > face : reach < face) {
                if (box_is_free(grid, slab_for(axis, positive, face, reach), inflation)) {
                    (positive ? box.max_corner : box.min_corner)[axis] = reach;
                }
            }
        }
    }
    return box;
}

namespace {

bool agent_blocks(const Vec3& p, std::span<const AgentObstacle> agents, double inflation) {
    for (const auto& a : agents) {
        if ((p - a.position).norm() < inflation + a.radius) return true;
    }
    return false;
}

}  // namespace

std::optional<GridPath> astar(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal,
                              double inflation, std::span<const AgentObstacle> agents) {
    const VoxelIndex s = grid.voxel_of(start);
    const VoxelIndex g = grid.voxel_of(goal);
    const std::size_t s_id = grid.linear(s);
    const std::size_t g_id = grid.linear(g);

    auto passable = [&](const VoxelIndex& v, std::size_t id) {
        if (id == s_id) return true;
        const Vec3 c = grid.voxel_center(v);
        bool statically_free = point_is_free(grid, c, inflation);
        if (!statically_free && id == g_id) statically_free = point_is_free(grid, goal, inflation);
        return statically_free && !agent_blocks(c, agents, inflation);
    };
    if (!passable(g, g_id)) return std::nullopt;

    const std::size_t n = grid.voxel_count();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(n, kInf);
    std::vector<std::int64_t> parent(n, -1);
    std::vector<std::uint8_t> state(n, 0);  // 0 unknown, 1 passable, 2 blocked, 3 closed

    const Vec3 goal_center = grid.voxel_center(g).array() / grid.resolution();
    auto heuristic = [&](const VoxelIndex& v) {
        return (v.cast<double>() + Vec3::Constant(0.5) + grid.bounds().min_corner / grid.resolution() -
                goal_center).norm();
    };

    using Entry = std::pair<double, std::size_t>;  // (f, linear id): id order is lexicographic (x, y, z)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    cost[s_id] = 0.0;
    open.emplace(heuristic(s), s_id);

    const std::array<VoxelIndex, 6> steps{VoxelIndex{1, 0, 0}, VoxelIndex{-1, 0, 0}, VoxelIndex{0, 1, 0},
                                          VoxelIndex{0, -1, 0}, VoxelIndex{0, 0, 1}, VoxelIndex{0, 0, -1}};
    const VoxelIndex& dims = grid.dims();
    auto from_linear = [&](std::size_t id) {
        const int z = static_cast<int>(id % dims.z());
        const int y = static_cast<int>((id / dims.z()) % dims.y());
        const int x = static_cast<int>(id / (static_cast<std::size_t>(dims.z()) * dims.y()));
        return VoxelIndex{x, y, z};
    };

    while (!open.empty()) {
        const auto [f, id] = open.top();
        open.pop();
        if (state[id] == 3) continue;
        state[id] = 3;
        if (id == g_id) break;
        const VoxelIndex v = from_linear(id);
        for (const auto& step : steps) {
            const VoxelIndex w = v + step;
            if (!grid.in_grid(w)) continue;
            const std::size_t wid = grid.linear(w);
            if (state[wid] == 3 || state[wid] == 2) continue;
            if (state[wid] == 0) {
                state[wid] = passable(w, wid) ? 1 : 2;
                if (state[wid] == 2) continue;
            }
            const double candidate = cost[id] + 1.0;
            if (candidate < cost[wid]) {
                cost[wid] = candidate;
                parent[wid] = static_cast<std::int64_t>(id);
                open.emplace(candidate + heuristic(w), wid);
            }
        }
    }
    if (state[g_id] != 3) return std::nullopt;

    GridPath path;
    for (std::int64_t id = static_cast<std::int64_t>(g_id); id >= 0; id = parent[id]) {
        path.waypoints.push_back(grid.voxel_center(from_linear(static_cast<std::size_t>(id))));
    }
    std::reverse(path.waypoints.begin(), path.waypoints.end());
    return path;
}

bool line_of_sight_free(const OccupancyGrid& grid, const Vec3& p, const Vec3& q, double inflation,
                        std::span<const AgentObstacle> agents, double downwash) {
    const double length = (q - p).norm();
    const int samples = static_cast<int>(std::ceil(length / (0.5 * grid.resolution())));
    for (int i = 0; i <= samples; ++i) {
        const double s = samples == 0 ? 0.0 : static_cast<double>(i) / samples;
        const Vec3 x = p + s * (q - p);
        if (!point_is_free(grid, x, inflation)) return false;
        for (const auto& a : agents) {
            Vec3 d = x - a.position;
            d.z() /= downwash;
            if (d.norm() <= inflation + a.radius) return false;
        }
    }
    return true;
}

}  // namespace lsc
