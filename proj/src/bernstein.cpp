#include "lsc/bernstein.hpp"

#include <array>
#include <cmath>
#include <string>

namespace lsc {

namespace {

constexpr double kTimeTolerance = 1e-9;

constexpr std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> make_binomials() {
    std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> table{};
    for (int n = 0; n <= kMaxDegree; ++n) {
        table[n][0] = 1.0;
        for (int k = 1; k <= n; ++k) {
            table[n][k] = table[n - 1][k - 1] + (k <= n - 1 ? table[n - 1][k] : 0.0);
        }
    }
    return table;
}

constexpr auto kBinomials = make_binomials();

void check_degree(int n) {
    if (n < 0 || n > kMaxDegree) {
        throw ArgumentError("degree " + std::to_string(n) + " outside [0, " +
                            std::to_string(kMaxDegree) + "]");
    }
}

}  // namespace

double binomial(int n, int k) {
    check_degree(n);
    if (k < 0 || k > n) throw ArgumentError("binomial index out of range");
    return kBinomials[n][k];
}

double basis_eval(int l, int n, double tau) {
    check_degree(n);
    if (l < 0 || l > n) {
        throw ArgumentError("basis index " + std::to_string(l) + " outside [0, " +
                            std::to_string(n) + "]");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) throw ArgumentError("tau outside [0, 1]");
    double value = kBinomials[n][l];
    for (int i = 0; i < l; ++i) value *= tau;
    for (int i = 0; i < n - l; ++i) value *= 1.0 - tau;
    return value;
}

BernsteinSegment::BernsteinSegment(std::vector<Vec3> control_points, double duration)
    : control_points_(std::move(control_points)), duration_(duration) {
    if (control_points_.empty()) throw ArgumentError("segment needs at least one control point");
    check_degree(degree());
    if (!(duration_ > 0.0)) throw ArgumentError("segment duration must be positive");
}

BernsteinSegment BernsteinSegment::constant(const Vec3& point, int degree, double duration) {
    check_degree(degree);
    return BernsteinSegment(std::vector<Vec3>(degree + 1, point), duration);
}

Vec3 BernsteinSegment::eval_normalized(double tau) const {
    const int n = degree();
    if (!(tau >= 0.0 && tau <= 1.0)) throw ArgumentError("tau outside [0, 1]");
    // Endpoint interpolation holds exactly.
    if (tau == 0.0) return control_points_.front();
    if (tau == 1.0) return control_points_.back();
    Vec3 sum = Vec3::Zero();
    for (int l = 0; l <= n; ++l) sum += basis_eval(l, n, tau) * control_points_[l];
    return sum;
}

BernsteinSegment derivative(const BernsteinSegment& seg) {
    const int n = seg.degree();
    if (n < 1) throw ArgumentError("cannot differentiate a degree-0 segment");
    std::vector<Vec3> points;
    points.reserve(n);
    const double scale = n / seg.duration();
    for (int l = 0; l < n; ++l) {
        points.emplace_back(scale * (seg.control_point(l + 1) - seg.control_point(l)));
    }
    return BernsteinSegment(std::move(points), seg.duration());
}

PiecewiseTrajectory::PiecewiseTrajectory(std::vector<BernsteinSegment> segments, double start_time)
    : segments_(std::move(segments)), start_time_(start_time) {
    if (segments_.empty()) throw ArgumentError("trajectory needs at least one segment");
    for (const auto& seg : segments_) {
        if (seg.degree() != segments_.front().degree() ||
            seg.duration() != segments_.front().duration()) {
            throw ArgumentError("segments must share degree and duration");
        }
    }
}

std::pair<int, double> PiecewiseTrajectory::locate(double t) const {
    const double dt = segment_duration();
    if (t < start_time_ - kTimeTolerance || t > end_time() + kTimeTolerance) {
        throw ArgumentError("time " + std::to_string(t) + " outside trajectory horizon [" +
                            std::to_string(start_time_) + ", " + std::to_string(end_time()) + "]");
    }
    double local = (t - start_time_) / dt;
    // Knot times that are off by rounding belong to the later segment.
    if (std::abs(local - std::round(local)) * dt <= kTimeTolerance) local = std::round(local);
    int m = static_cast<int>(std::floor(local));
    if (m < 0) m = 0;
    if (m > num_segments() - 1) m = num_segments() - 1;
    double tau = local - m;
    if (tau < 0.0) tau = 0.0;
    if (tau > 1.0) tau = 1.0;
    return {m, tau};
}

Vec3 eval(const PiecewiseTrajectory& traj, double t) {
    const auto [m, tau] = traj.locate(t);
    return traj.segment(m).eval_normalized(tau);
}

Vec3 eval_derivative(const PiecewiseTrajectory& traj, double t, int order) {
    if (order < 0) throw ArgumentError("negative derivative order");
    const auto [m, tau] = traj.locate(t);
    BernsteinSegment seg = traj.segment(m);
    for (int i = 0; i < order; ++i) {
        if (seg.degree() == 0) return Vec3::Zero();
        seg = derivative(seg);
    }
    return seg.eval_normalized(tau);
}

PiecewiseTrajectory shift_for_initial(const std::optional<PiecewiseTrajectory>& prev,
                                      const Vec3& current_position,
                                      const HorizonShape& shape,
                                      double start_time) {
    if (!prev) {
        std::vector<BernsteinSegment> segments(
            shape.segments,
            BernsteinSegment::constant(current_position, shape.degree, shape.segment_duration));
        return PiecewiseTrajectory(std::move(segments), start_time);
    }
    const auto& old = prev->segments();
    std::vector<BernsteinSegment> segments(old.begin() + 1, old.end());
    segments.push_back(
        BernsteinSegment::constant(prev->terminal_point(), prev->degree(), prev->segment_duration()));
    return PiecewiseTrajectory(std::move(segments), prev->start_time() + prev->segment_duration());
}

}  // namespace lsc
