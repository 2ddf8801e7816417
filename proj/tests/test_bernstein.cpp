#include <doctest.h>

#include <random>

#include "lsc/bernstein.hpp"
#include "lsc/geometry.hpp"
#include "oracles.hpp"

using namespace lsc;

namespace {

BernsteinSegment random_segment(std::mt19937_64& rng, int degree, double duration) {
    std::vector<Vec3> pts;
    for (int l = 0; l <= degree; ++l) pts.push_back(oracle::random_vec(rng, -2.0, 2.0));
    return {pts, duration};
}

}  // namespace

TEST_CASE("binomial coefficients") {
    CHECK(binomial(5, 0) == 1.0);
    CHECK(binomial(5, 2) == 10.0);
    CHECK(binomial(10, 5) == 252.0);
    CHECK_THROWS_AS(binomial(11, 3), ArgumentError);
    CHECK_THROWS_AS(binomial(4, 5), ArgumentError);
}

TEST_CASE("basis is a partition of unity") {
    for (int n = 0; n <= kMaxDegree; ++n) {
        for (double tau : {0.0, 0.13, 0.5, 0.77, 1.0}) {
            double sum = 0.0;
            for (int l = 0; l <= n; ++l) {
                const double b = basis_eval(l, n, tau);
                CHECK(b >= 0.0);
                sum += b;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
    CHECK_THROWS_AS(basis_eval(0, 5, 1.5), ArgumentError);
    CHECK_THROWS_AS(basis_eval(6, 5, 0.5), ArgumentError);
}

TEST_CASE("segment evaluation matches de Casteljau") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto seg = random_segment(rng, 1 + trial % kMaxDegree, 0.2);
        for (int k = 0; k < 20; ++k) {
            const double tau = u(rng);
            worst = std::max(worst, (seg.eval_normalized(tau) - oracle::de_casteljau(seg.control_points(), tau)).norm());
        }
        CHECK(seg.eval_normalized(0.0) == seg.control_points().front());
        CHECK(seg.eval_normalized(1.0) == seg.control_points().back());
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("hodograph agrees with central differences") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto seg = random_segment(rng, 5, 0.2);
        const auto d = derivative(seg);
        CHECK(d.degree() == 4);
        for (double tau : {0.1, 0.4, 0.9}) {
            const double h = 1e-6;
            const Vec3 fd = (seg.eval_normalized(tau + h) - seg.eval_normalized(tau - h)) / (2 * h * seg.duration());
            CHECK((d.eval_normalized(tau) - fd).norm() < 1e-6);
        }
    }
    CHECK_THROWS_AS(derivative(BernsteinSegment::constant(Vec3::Zero(), 0, 1.0)), ArgumentError);
}

TEST_CASE("evaluated points stay in the convex hull of their control points") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto seg = random_segment(rng, 5, 0.2);
        for (int k = 0; k <= 100; ++k) {
            const Vec3 p = seg.eval_normalized(k / 100.0);
            std::vector<Vec3> shifted;
            for (const auto& c : seg.control_points()) shifted.push_back(c - p);
            CHECK(closest_point_to_origin(shifted).distance <= 1e-9);
        }
    }
}

TEST_CASE("piecewise trajectory lookup") {
    std::mt19937_64 rng(5);
    std::vector<BernsteinSegment> segs;
    for (int m = 0; m < 3; ++m) segs.push_back(random_segment(rng, 5, 0.2));
    const PiecewiseTrajectory traj(segs, 1.0);
    CHECK(traj.end_time() == doctest::Approx(1.6));
    CHECK(traj.locate(1.0).first == 0);
    CHECK(traj.locate(1.2).first == 1);
    CHECK(traj.locate(1.6).first == 2);
    CHECK(traj.locate(1.6).second == doctest::Approx(1.0));
    CHECK((eval(traj, 1.3) - segs[1].eval_normalized(0.5)).norm() < 1e-12);
    CHECK_THROWS_AS(eval(traj, 0.9), ArgumentError);
    CHECK_THROWS_AS(eval(traj, 1.7), ArgumentError);
    CHECK(traj.terminal_point() == segs[2].control_points().back());

    std::vector<BernsteinSegment> mixed{random_segment(rng, 5, 0.2), random_segment(rng, 4, 0.2)};
    CHECK_THROWS_AS(PiecewiseTrajectory(mixed, 0.0), ArgumentError);
}

TEST_CASE("initial trajectory at the first step holds the current position") {
    const HorizonShape shape;
    const Vec3 p(0.3, -0.2, 1.1);
    const auto traj = shift_for_initial(std::nullopt, p, shape, 2.0);
    CHECK(traj.num_segments() == shape.segments);
    CHECK(traj.start_time() == 2.0);
    for (const auto& seg : traj.segments())
        for (const auto& c : seg.control_points()) CHECK(c == p);
}

TEST_CASE("shifted initial trajectory reuses the previous plan") {
    std::mt19937_64 rng(9);
    const HorizonShape shape;
    std::vector<BernsteinSegment> segs;
    for (int m = 0; m < shape.segments; ++m) segs.push_back(random_segment(rng, shape.degree, shape.segment_duration));
    const PiecewiseTrajectory prev(segs, 0.0);
    const auto next = shift_for_initial(prev, Vec3::Zero(), shape);
    CHECK(next.start_time() == doctest::Approx(0.2));
    for (int m = 0; m + 1 < shape.segments; ++m) {
        CHECK(next.segment(m).control_points() == prev.segment(m + 1).control_points());
    }
    for (const auto& c : next.segments().back().control_points()) CHECK(c == prev.terminal_point());
    for (int order = 0; order <= 2; ++order) {
        CHECK((eval_derivative(next, 0.5, order) - eval_derivative(prev, 0.5, order)).norm() < 1e-12);
    }
}
