#pragma once

#include <optional>
#include <vector>

#include "lsc/common.hpp"

namespace lsc {

inline constexpr int kMaxDegree = 10;

/// Exact binomial coefficient C(n, k) for 0 <= k <= n <= kMaxDegree.
double binomial(int n, int k);

/// Bernstein basis polynomial b_{l,n}(tau).
double basis_eval(int l, int n, double tau);

/// One polynomial segment in Bernstein form, defined over [0, duration].
class BernsteinSegment {
public:
    BernsteinSegment(std::vector<Vec3> control_points, double duration);

    /// A degree-n segment whose control points all equal `point`.
    static BernsteinSegment constant(const Vec3& point, int degree, double duration);

    int degree() const { return static_cast<int>(control_points_.size()) - 1; }
    double duration() const { return duration_; }
    const std::vector<Vec3>& control_points() const { return control_points_; }
    const Vec3& control_point(int l) const { return control_points_.at(l); }

    /// Position at normalized time tau in [0, 1].
    Vec3 eval_normalized(double tau) const;

private:
    std::vector<Vec3> control_points_;
    double duration_;
};

/// Hodograph: the time derivative as a degree n-1 segment with the same duration.
BernsteinSegment derivative(const BernsteinSegment& seg);

/// M segments of equal degree and duration, starting at start_time.
class PiecewiseTrajectory {
public:
    PiecewiseTrajectory(std::vector<BernsteinSegment> segments, double start_time);

    int num_segments() const { return static_cast<int>(segments_.size()); }
    int degree() const { return segments_.front().degree(); }
    double segment_duration() const { return segments_.front().duration(); }
    double start_time() const { return start_time_; }
    double end_time() const { return start_time_ + num_segments() * segment_duration(); }

    const std::vector<BernsteinSegment>& segments() const { return segments_; }
    const BernsteinSegment& segment(int m) const { return segments_.at(m); }

    /// Index of the segment containing t and the normalized time inside it.
    std::pair<int, double> locate(double t) const;

    /// Final control point c_{M,n}.
    const Vec3& terminal_point() const { return segments_.back().control_points().back(); }

private:
    std::vector<BernsteinSegment> segments_;
    double start_time_;
};

/// Position at absolute time t. Throws ArgumentError outside the horizon.
Vec3 eval(const PiecewiseTrajectory& traj, double t);

/// order-th time derivative at absolute time t (order 0 is position).
Vec3 eval_derivative(const PiecewiseTrajectory& traj, double t, int order);

/// Shape of a planning horizon.
struct HorizonShape {
    int degree = 5;
    int segments = 5;
    double segment_duration = 0.2;
};

/// Initial trajectory for the next replanning step. Without a previous plan
/// every segment is constant at current_position starting at start_time;
/// otherwise the previous plan is shifted by one segment and the final
/// segment holds the previous terminal point.
PiecewiseTrajectory shift_for_initial(const std::optional<PiecewiseTrajectory>& prev,
                                      const Vec3& current_position,
                                      const HorizonShape& shape,
                                      double start_time = 0.0);

}  // namespace lsc
