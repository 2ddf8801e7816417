#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsc/common.hpp"

namespace lsc {

struct AxisBox {
    Vec3 min_corner;
    Vec3 max_corner;

    bool contains(const Vec3& p, double tol = 0.0) const {
        return (p.array() >= min_corner.array() - tol).all() &&
               (p.array() <= max_corner.array() + tol).all();
    }
    Vec3 extent() const { return max_corner - min_corner; }
    bool operator==(const AxisBox&) const = default;
};

using VoxelIndex = Eigen::Vector3i;

/// Uniform voxel map of the static world. Immutable after construction.
class OccupancyGrid {
public:
    /// Rasterizes obstacle boxes: a voxel is occupied iff its closed cell
    /// intersects a box.
    OccupancyGrid(double resolution, AxisBox bounds, std::vector<AxisBox> obstacles = {});

    static OccupancyGrid from_json(const nlohmann::json& j);
    static OccupancyGrid load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    double resolution() const { return resolution_; }
    const AxisBox& bounds() const { return bounds_; }
    const std::vector<AxisBox>& obstacles() const { return obstacles_; }
    const VoxelIndex& dims() const { return dims_; }

    bool in_grid(const VoxelIndex& v) const {
        return (v.array() >= 0).all() && (v.array() < dims_.array()).all();
    }
    VoxelIndex voxel_of(const Vec3& p) const;
    Vec3 voxel_center(const VoxelIndex& v) const;
    bool occupied(const VoxelIndex& v) const { return occupied_[linear(v)] != 0; }
    std::size_t linear(const VoxelIndex& v) const {
        return (static_cast<std::size_t>(v.x()) * dims_.y() + v.y()) * dims_.z() + v.z();
    }
    std::size_t voxel_count() const { return occupied_.size(); }

    /// Number of occupied voxels in the inclusive index range, clipped to the grid.
    long count_occupied(VoxelIndex lo, VoxelIndex hi) const;

private:
    double resolution_;
    AxisBox bounds_;
    std::vector<AxisBox> obstacles_;
    VoxelIndex dims_;
    std::vector<std::uint8_t> occupied_;
    std::vector<std::int32_t> prefix_;  // (nx+1)(ny+1)(nz+1) summed-volume table
};

/// True iff `box` grown by `inflation` on every axis stays inside the world
/// bounds and overlaps the interior of no occupied voxel.
bool box_is_free(const OccupancyGrid& grid, const AxisBox& box, double inflation);

inline bool point_is_free(const OccupancyGrid& grid, const Vec3& p, double inflation) {
    return box_is_free(grid, AxisBox{p, p}, inflation);
}

/// Axis-search corridor: grows a box from `seed` one voxel layer at a time in
/// the order +x, -x, +y, -y, +z, -z until every direction is blocked.
/// Throws InfeasibleSeedError if the seed itself is not free.
AxisBox build_sfc(const OccupancyGrid& grid, const Vec3& seed, double inflation);

/// Same growth starting from a free seed box instead of a point.
AxisBox build_sfc(const OccupancyGrid& grid, const AxisBox& seed, double inflation);

struct AgentObstacle {
    Vec3 position;
    double radius;
};

struct GridPath {
    std::vector<Vec3> waypoints;  // voxel centers, start first
};

/// 6-connected A* with a Euclidean heuristic. Voxels whose centers lie within
/// (inflation + radius) of an agent obstacle are blocked, except the start
/// voxel. Returns nullopt when the goal voxel is unreachable.
std::optional<GridPath> astar(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal,
                              double inflation, std::span<const AgentObstacle> agents);

/// Samples pq every resolution/2 and requires each sample to be statically
/// free under `inflation` and at scaled distance |E (x - p_j)| > inflation + r_j
/// from every agent obstacle.
bool line_of_sight_free(const OccupancyGrid& grid, const Vec3& p, const Vec3& q, double inflation,
                        std::span<const AgentObstacle> agents, double downwash = 1.0);

}  // namespace lsc
