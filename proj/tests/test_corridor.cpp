#include <doctest.h>

#include <random>

#include "lsc/corridor.hpp"
#include "oracles.hpp"

using namespace lsc;

namespace {

const HorizonShape kShape;

PiecewiseTrajectory hold(const Vec3& p) { return shift_for_initial(std::nullopt, p, kShape); }

PiecewiseTrajectory random_trajectory(std::mt19937_64& rng, const Vec3& center, double spread) {
    std::vector<BernsteinSegment> segs;
    for (int m = 0; m < kShape.segments; ++m) {
        std::vector<Vec3> pts;
        for (int l = 0; l <= kShape.degree; ++l) pts.push_back(center + oracle::random_vec(rng, -spread, spread));
        segs.emplace_back(pts, kShape.segment_duration);
    }
    return {segs, 0.0};
}

}  // namespace

TEST_CASE("two hovering agents on the x axis") {
    const EllipsoidModel model(0.3, 1.0);
    const auto pair = build_lsc_pair(hold(Vec3(1, 0, 0)), hold(Vec3(-1, 0, 0)), model);
    REQUIRE(pair.for_first.rows.size() == 30);
    for (const auto& row : pair.for_first.rows) {
        CHECK((row.normal - Vec3(1, 0, 0)).norm() < 1e-15);
        CHECK(row.margin == doctest::Approx(1.15).epsilon(1e-15));
        // x >= 0.15
        CHECK(row.slack(Vec3(0.15, 0.7, -0.2)) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(row.slack(Vec3(0.14, 0, 0)) < 0.0);
    }
    for (const auto& row : pair.for_second.rows) {
        CHECK((row.normal - Vec3(-1, 0, 0)).norm() < 1e-15);
        // x <= -0.15
        CHECK(row.slack(Vec3(-0.15, 0.3, 0.9)) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(row.slack(Vec3(-0.14, 0, 0)) < 0.0);
    }
    for (double c : pair.clearance) CHECK(c == doctest::Approx(1.7));
}

TEST_CASE("vertical pairs respect the downwash model") {
    const EllipsoidModel model(0.3, 2.0);
    const auto pair = build_lsc_pair(hold(Vec3(0, 0, 2)), hold(Vec3(0, 0, 0)), model);
    const auto& row = pair.for_first.at(0, 0);
    CHECK((row.normal - Vec3::UnitZ()).norm() < 1e-15);
    // support along z is 0.6, so the margin is (0.6 + 2) / 2.
    CHECK(row.margin == doctest::Approx(1.3));
}

TEST_CASE("paired constraints are exact mirrors") {
    std::mt19937_64 rng(8);
    const EllipsoidModel model(0.3, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_trajectory(rng, Vec3::Zero(), 0.4);
        const auto b = random_trajectory(rng, oracle::random_vec(rng, 1.5, 2.5), 0.4);
        const auto pair = build_lsc_pair(a, b, model, trial % 2 ? 0.01 : 0.0);
        for (int m = 0; m < kShape.segments; ++m) {
            for (int l = 0; l <= kShape.degree; ++l) {
                const auto& f = pair.for_first.at(m, l);
                const auto& s = pair.for_second.at(m, l);
                CHECK(s.normal == -f.normal);
                CHECK(s.margin == f.margin);
                CHECK(f.anchor == b.segment(m).control_point(l));
                CHECK(s.anchor == a.segment(m).control_point(l));
            }
        }
    }
}

TEST_CASE("initial control points keep positive slack") {
    std::mt19937_64 rng(12);
    const EllipsoidModel model(0.3, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_trajectory(rng, Vec3::Zero(), 0.3);
        const auto b = random_trajectory(rng, oracle::random_vec(rng, 0.8, 1.5), 0.3);
        LscPair pair;
        try {
            pair = build_lsc_pair(a, b, model);
        } catch (const SafetyDegeneracyError&) {
            continue;
        }
        for (int m = 0; m < kShape.segments; ++m) {
            if (pair.clearance[m] <= 0.0) continue;
            for (int l = 0; l <= kShape.degree; ++l) {
                const double sa = pair.for_first.at(m, l).slack(a.segment(m).control_point(l));
                const double sb = pair.for_second.at(m, l).slack(b.segment(m).control_point(l));
                CHECK(sa > 0.0);
                CHECK(sa == sb);
            }
        }
    }
}

TEST_CASE("trajectories inside their corridors never collide") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const EllipsoidModel model(0.3, 2.0);
    double worst = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_trajectory(rng, Vec3::Zero(), 0.3);
        const auto b = random_trajectory(rng, oracle::random_vec(rng, 1.0, 1.6), 0.3);
        const auto pair = build_lsc_pair(a, b, model);
        // Random control points pushed onto or beyond their constraint planes.
        for (int m = 0; m < kShape.segments; ++m) {
            std::vector<Vec3> pa, pb;
            for (int l = 0; l <= kShape.degree; ++l) {
                Vec3 x = oracle::random_vec(rng, -2.0, 2.0);
                Vec3 y = oracle::random_vec(rng, -2.0, 2.0);
                const auto& fa = pair.for_first.at(m, l);
                const auto& fb = pair.for_second.at(m, l);
                x += fa.normal * (std::max(0.0, -fa.slack(x)) + 0.1 * u(rng));
                y += fb.normal * (std::max(0.0, -fb.slack(y)) + 0.1 * u(rng));
                if (u(rng) < 0.3) x -= fa.normal * fa.slack(x);
                pa.push_back(x);
                pb.push_back(y);
            }
            for (int k = 0; k <= 50; ++k) {
                const double tau = k / 50.0;
                const double d = model.scaled_norm(oracle::de_casteljau(pa, tau) - oracle::de_casteljau(pb, tau));
                worst = std::min(worst, d - model.radius_sum);
            }
        }
    }
    CHECK(worst >= -1e-12);
}

TEST_CASE("overlapping hulls are rejected") {
    const EllipsoidModel model(0.3, 1.0);
    CHECK_THROWS_AS(build_lsc_pair(hold(Vec3(0.1, 0, 0)), hold(Vec3(-0.1, 0, 0)), model), SafetyDegeneracyError);
    CHECK_THROWS_AS(build_lsc_pair(hold(Vec3::Zero()), hold(Vec3::Zero()), model), SafetyDegeneracyError);
    // Exact contact still yields a tangent plane.
    const auto touching = build_lsc_pair(hold(Vec3(0.15, 0, 0)), hold(Vec3(-0.15, 0, 0)), model);
    CHECK(touching.clearance[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("corridor sequence propagation") {
    const OccupancyGrid grid(0.1, AxisBox{Vec3(-1.5, -1.5, 0), Vec3(1.5, 1.5, 2)},
                             {AxisBox{Vec3(0.5, -1.5, 0), Vec3(0.7, 1.5, 2)}});
    const auto init = hold(Vec3(0, 0, 1));
    const auto first = propagate_sfc(std::nullopt, init, grid, 0.15);
    REQUIRE(first.boxes.size() == 5);
    for (const auto& b : first.boxes) CHECK(b == first.boxes.front());
    CHECK(sfc_containment_violation(first, init) == 0.0);

    SfcSequence marked = first;
    marked.boxes[1].min_corner.x() -= 0.01;
    const auto next = propagate_sfc(marked, init, grid, 0.15);
    CHECK(next.boxes[0] == marked.boxes[1]);
    CHECK(next.boxes[3] == marked.boxes[4]);
    CHECK(next.boxes[4] == first.boxes[0]);

    CHECK_THROWS_AS(propagate_sfc(SfcSequence{{first.boxes[0]}}, init, grid, 0.15), ArgumentError);
    CHECK_THROWS_AS(propagate_sfc(std::nullopt, hold(Vec3(0.6, 0, 1)), grid, 0.15), InfeasibleSeedError);
}

TEST_CASE("corridor seeded toward a target") {
    const OccupancyGrid grid(0.1, AxisBox{Vec3(0, 0, 0), Vec3(4, 3, 1)},
                             {AxisBox{Vec3(0, 1.45, 0), Vec3(1.6, 1.55, 1)}, AxisBox{Vec3(2.4, 1.45, 0), Vec3(4, 1.55, 1)}});
    const Vec3 from(2.0, 0.7, 0.5), to(2.0, 2.5, 0.5);
    // Grown from the point alone, the box spreads along the wall and stops there.
    const auto plain = build_sfc(grid, from, 0.15);
    CHECK(plain.max_corner.y() < 1.45);
    const auto seed = seed_box_toward(grid, from, to, 0.15);
    CHECK(seed.contains(from));
    CHECK(seed.contains(to));
    const auto through = propagate_sfc(std::nullopt, hold(from), grid, 0.15, to);
    CHECK(through.boxes[0].contains(to));
    CHECK(box_is_free(grid, through.boxes[0], 0.15));

    // Target behind a wall: the seed stops at the last free fraction.
    const auto partial = seed_box_toward(grid, Vec3(1.0, 0.7, 0.5), Vec3(1.0, 2.5, 0.5), 0.15);
    CHECK(box_is_free(grid, partial, 0.15));
    CHECK(partial.max_corner.y() == doctest::Approx(1.25).epsilon(1e-6));
}
