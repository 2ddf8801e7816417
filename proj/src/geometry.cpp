#include "lsc/geometry.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>

namespace lsc {

EllipsoidModel::EllipsoidModel(double radius_sum_, double downwash_)
    : radius_sum(radius_sum_), downwash(downwash_) {
    if (!(radius_sum > 0.0)) throw ArgumentError("collision radius must be positive");
    if (!(downwash >= 1.0)) throw ArgumentError("downwash coefficient must be >= 1");
}

double support(const EllipsoidModel& model, const Vec3& n) {
    if (n.squaredNorm() == 0.0) throw ArgumentError("support direction must be nonzero");
    return model.radius_sum * model.unscale(n).norm();
}

std::vector<Vec3> to_sphere_frame(std::span<const Vec3> points, const EllipsoidModel& model) {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(model.scale(p));
    return out;
}

std::vector<Vec3> from_sphere_frame(std::span<const Vec3> points, const EllipsoidModel& model) {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(model.unscale(p));
    return out;
}

namespace {

// Simplices whose Gram determinant falls below this fraction of the product
// of squared edge lengths are treated as affinely dependent; their lower
// dimensional faces are enumerated anyway.
constexpr double kDegenerateRatio = 1e-20;

struct SimplexResult {
    Vec3 point;
    std::array<int, 4> members{};
    int size = 0;
};

// Closest point to the origin over all faces of the simplex spanned by `verts`.
// Faces are visited by increasing size so the smallest supporting face wins
// ties (relative 1e-12 in squared distance).
SimplexResult closest_on_simplex(const std::array<Vec3, 4>& verts, int count) {
    SimplexResult best;
    double best_sq = std::numeric_limits<double>::infinity();
    double scale_sq = 0.0;
    for (int i = 0; i < count; ++i) scale_sq = std::max(scale_sq, verts[i].squaredNorm());

    for (int size = 1; size <= count; ++size) {
        for (int mask = 1; mask < (1 << count); ++mask) {
            if (__builtin_popcount(static_cast<unsigned>(mask)) != size) continue;
            std::array<int, 4> idx{};
            int s = 0;
            for (int i = 0; i < count; ++i) {
                if (mask & (1 << i)) idx[s++] = i;
            }
            Vec3 point;
            if (size == 1) {
                point = verts[idx[0]];
            } else {
                const Vec3& base = verts[idx[0]];
                Eigen::Matrix<double, 3, Eigen::Dynamic> edges(3, size - 1);
                for (int k = 1; k < size; ++k) edges.col(k - 1) = verts[idx[k]] - base;
                const Eigen::MatrixXd gram = edges.transpose() * edges;
                double diag_product = 1.0;
                for (int k = 0; k < size - 1; ++k) diag_product *= gram(k, k);
                if (!(diag_product > 0.0)) continue;
                if (gram.determinant() <= kDegenerateRatio * diag_product) continue;
                const Eigen::VectorXd mu = edges.colPivHouseholderQr().solve(-base);
                const double lambda0 = 1.0 - mu.sum();
                if (lambda0 < 0.0 || (mu.array() < 0.0).any()) continue;
                point = base + edges * mu;
                // A full tetrahedron only counts if it really contains the origin.
                if (size == 4 && point.squaredNorm() > 1e-24 * scale_sq) continue;
            }
            const double sq = point.squaredNorm();
            if (std::isinf(best_sq) || sq < best_sq - 1e-12 * best_sq) {
                best_sq = sq;
                best.point = point;
                best.size = size;
                for (int k = 0; k < size; ++k) best.members[k] = idx[k];
            }
        }
    }
    return best;
}

}  // namespace

ClosestPoint closest_point_to_origin(std::span<const Vec3> points) {
    if (points.empty()) throw ArgumentError("closest_point_to_origin needs at least one point");

    std::array<int, 4> simplex{0, 0, 0, 0};
    int simplex_size = 1;
    Vec3 v = points[0];

    constexpr int kMaxIterations = 64;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const double v_sq = v.squaredNorm();
        if (v_sq == 0.0) break;

        int w_idx = 0;
        double w_dot = points[0].dot(v);
        for (std::size_t i = 1; i < points.size(); ++i) {
            const double d = points[i].dot(v);
            if (d < w_dot) {
                w_dot = d;
                w_idx = static_cast<int>(i);
            }
        }
        if (v_sq - w_dot <= 1e-14 * v_sq) break;
        bool present = false;
        for (int k = 0; k < simplex_size; ++k) present |= simplex[k] == w_idx;
        if (present) break;

        simplex[simplex_size++] = w_idx;
        std::array<Vec3, 4> verts;
        for (int k = 0; k < simplex_size; ++k) verts[k] = points[simplex[k]];
        const SimplexResult reduced = closest_on_simplex(verts, simplex_size);
        if (reduced.size == 0) break;  // every face degenerate; keep previous v

        std::array<int, 4> next{};
        for (int k = 0; k < reduced.size; ++k) next[k] = simplex[reduced.members[k]];
        simplex = next;
        simplex_size = reduced.size;
        if (simplex_size == 4) {
            v = Vec3::Zero();
            break;
        }
        if (reduced.point.squaredNorm() >= v_sq) break;  // no progress
        v = reduced.point;
    }
    const double distance = v.norm();
    if (distance == 0.0) return {Vec3::Zero(), 0.0};
    return {v, distance};
}

}  // namespace lsc
