#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "lsc/qpsolve.hpp"
#include "oracles.hpp"

using namespace lsc;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd A(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) A(i, j) = g(rng);
    return A;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n) { return random_matrix(rng, n, 1); }

QpProblem random_problem(std::mt19937_64& rng, int n) {
    QpProblem qp;
    const Eigen::MatrixXd B = random_matrix(rng, n, n);
    qp.hessian = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
    qp.linear = random_vector(rng, n);
    qp.eq_matrix.resize(0, n);
    qp.eq_rhs.resize(0);
    qp.in_matrix.resize(0, n);
    qp.in_rhs.resize(0);
    return qp;
}

void set_inequalities(QpProblem& qp, const Eigen::MatrixXd& C, const Eigen::VectorXd& d) {
    qp.in_matrix = C;
    qp.in_rhs = d;
    qp.in_kinds.assign(d.size(), RowKind::Corridor);
}

}  // namespace

TEST_CASE("jerk Gram matrix matches quadrature") {
    const oracle::GaussLegendre gl;
    for (int n = 3; n <= 7; ++n) {
        for (int r = 0; r <= 3; ++r) {
            const Eigen::MatrixXd G = derivative_gram(n, r);
            double worst = 0.0;
            for (int a = 0; a <= n; ++a)
                for (int b = 0; b <= n; ++b) {
                    double q = 0.0;
                    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                        const double t = gl.nodes[k];
                        q += gl.weights[k] * oracle::bernstein_derivative(a, n, r, t) *
                             oracle::bernstein_derivative(b, n, r, t);
                    }
                    worst = std::max(worst, std::abs(q - G(a, b)));
                }
            CHECK(worst <= 1e-8);
        }
    }
    CHECK(derivative_gram(2, 3).isZero());
}

TEST_CASE("equality constrained problems match the KKT solution") {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4 + trial % 20;
        const int m = 1 + trial % (n - 1);
        QpProblem qp = random_problem(rng, n);
        qp.eq_matrix = random_matrix(rng, m, n);
        qp.eq_rhs = random_vector(rng, m);
        const auto sol = solve(qp);
        REQUIRE(sol.ok());
        const Eigen::VectorXd expected = oracle::kkt_solve(qp.hessian, qp.linear, qp.eq_matrix, qp.eq_rhs);
        worst = std::max(worst, (sol.values - expected).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("inequality constrained problems match active-set enumeration") {
    std::mt19937_64 rng(5);
    int solved = 0, infeasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        QpProblem qp = random_problem(rng, n);
        const Eigen::MatrixXd C = random_matrix(rng, 6, n);
        const Eigen::VectorXd d = random_vector(rng, 6);
        set_inequalities(qp, C, d);
        if (trial % 4 == 0) {
            qp.eq_matrix = random_matrix(rng, 1, n);
            qp.eq_rhs = random_vector(rng, 1);
        }
        // Fold the equality into the enumeration as a pair of inequalities.
        Eigen::MatrixXd Call(C.rows() + 2 * qp.eq_matrix.rows(), n);
        Eigen::VectorXd dall(Call.rows());
        Call << C, qp.eq_matrix, -qp.eq_matrix;
        dall << d, qp.eq_rhs, -qp.eq_rhs;
        const auto expected = oracle::enumerate_qp(qp.hessian, qp.linear, Call, dall);
        const auto sol = solve(qp);
        if (!expected) {
            CHECK(sol.status == QpStatus::Infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(sol.ok());
        CHECK((sol.values - *expected).cwiseAbs().maxCoeff() <= 1e-7);
        CHECK(sol.max_inequality_violation <= 1e-9);
        CHECK(sol.stationarity_residual <= 1e-6);
        ++solved;
    }
    CHECK(solved > 100);
    CHECK(infeasible > 0);
}

TEST_CASE("solver status reporting") {
    QpProblem qp;
    qp.hessian = Eigen::MatrixXd::Identity(1, 1);
    qp.linear = Eigen::VectorXd::Zero(1);
    qp.eq_matrix.resize(0, 1);
    qp.eq_rhs.resize(0);
    Eigen::MatrixXd C(2, 1);
    C << 1.0, -1.0;
    set_inequalities(qp, C, Eigen::Vector2d(-1.0, -1.0));  // x <= -1 and x >= 1
    CHECK(solve(qp).status == QpStatus::Infeasible);

    set_inequalities(qp, C.topRows(1), Eigen::VectorXd::Constant(1, -1.0));
    const auto ok = solve(qp);
    REQUIRE(ok.ok());
    CHECK(ok.values[0] == doctest::Approx(-1.0));
    CHECK(ok.objective == doctest::Approx(0.5));
    CHECK(solve(qp, SolveOptions{1e-6, 0}).status == QpStatus::IterationLimit);

    QpProblem bad = qp;
    bad.eq_matrix = Eigen::MatrixXd::Ones(2, 1);
    bad.eq_rhs = Eigen::Vector2d(1.0, 2.0);
    CHECK(solve(bad).status == QpStatus::Infeasible);

    bad = qp;
    bad.hessian.resize(2, 2);
    CHECK_THROWS_AS(solve(bad), ArgumentError);
    bad = qp;
    bad.in_kinds = {RowKind::Velocity, RowKind::Velocity};
    CHECK_THROWS_AS(solve(bad), ArgumentError);
    CHECK(std::string(to_string(QpStatus::Optimal)) == "optimal");
}

TEST_CASE("candidate residuals by row kind") {
    QpProblem qp;
    qp.hessian = Eigen::MatrixXd::Identity(2, 2);
    qp.linear = Eigen::VectorXd::Zero(2);
    qp.eq_matrix = Eigen::RowVector2d(1.0, 1.0);
    qp.eq_rhs = Eigen::VectorXd::Constant(1, 1.0);
    qp.in_matrix = Eigen::Matrix2d::Identity();
    qp.in_rhs = Eigen::Vector2d(0.5, 0.25);
    qp.in_kinds = {RowKind::Velocity, RowKind::SafeCorridor};
    const auto r = check_candidate(qp, Eigen::Vector2d(0.6, 0.5));
    CHECK(r.max_equality_residual == doctest::Approx(0.1));
    CHECK(r.max_inequality_violation == doctest::Approx(0.25));
    CHECK(r.max_violation_by_kind[static_cast<int>(RowKind::Velocity)] == doctest::Approx(0.1));
    CHECK(r.min_slack_by_kind[static_cast<int>(RowKind::SafeCorridor)] == doctest::Approx(-0.25));
    CHECK(r.rows_by_kind[static_cast<int>(RowKind::Corridor)] == 0);
}

TEST_CASE("trajectory problem structure") {
    const HorizonShape shape;
    const AxisBox box{Vec3(-1, -1, 0), Vec3(1, 1, 2)};
    const SfcSequence sfc{std::vector<AxisBox>(5, box)};
    LscBlock block;
    block.degree = 5;
    block.rows.assign(30, HalfSpaceConstraint{Vec3::UnitX(), Vec3(-1, 0, 1), 0.5});
    const InitialState start{Vec3(0, 0, 1), Vec3(0.2, 0, 0), Vec3(0, 0.1, 0)};
    const QpProblem qp = assemble(shape, start, Vec3(0.5, 0.5, 1), sfc, {block}, DynamicLimits{}, CostWeights{});
    CHECK(qp.dimension() == 90);
    CHECK(qp.eq_matrix.rows() == 60);
    CHECK(qp.in_matrix.rows() == 150 + 120 + 180 + 30);
    const auto counts = check_candidate(qp, Eigen::VectorXd::Zero(90)).rows_by_kind;
    CHECK(counts == std::array<int, kRowKinds>{150, 120, 180, 30});

    const auto sol = solve(qp);
    REQUIRE(sol.ok());
    const auto traj = unpack(sol.values, shape, 0.0);
    CHECK((pack(traj) - sol.values).norm() == 0.0);
    // Initial state and continuity hold on the evaluated trajectory.
    CHECK((eval_derivative(traj, 0.0, 0) - start.position).norm() < 1e-9);
    CHECK((eval_derivative(traj, 0.0, 1) - start.velocity).norm() < 1e-9);
    CHECK((eval_derivative(traj, 0.0, 2) - start.acceleration).norm() < 1e-9);
    for (int m = 1; m < 5; ++m) {
        for (int order = 0; order <= 2; ++order) {
            const Vec3 left = [&] {
                const auto& seg = traj.segment(m - 1);
                BernsteinSegment s = seg;
                for (int k = 0; k < order; ++k) s = derivative(s);
                return s.eval_normalized(1.0);
            }();
            const Vec3 right = eval_derivative(traj, 0.2 * m, order);
            CHECK((left - right).norm() < 1e-6);
        }
    }
    for (const auto& c : traj.segments().back().control_points()) {
        CHECK((c - traj.segments().back().control_point(0)).norm() < 1e-9);
    }
    // Every sampled velocity and acceleration stays within the limits.
    for (int k = 0; k <= 100; ++k) {
        const double t = k / 100.0;
        CHECK(eval_derivative(traj, t, 1).cwiseAbs().maxCoeff() <= 1.0 + 1e-6);
        CHECK(eval_derivative(traj, t, 2).cwiseAbs().maxCoeff() <= 2.0 + 1e-6);
        CHECK(eval(traj, t).x() >= -0.5 - 1e-9);
    }
    CHECK_THROWS_AS(assemble(HorizonShape{2, 5, 0.2}, start, Vec3::Zero(), sfc, {}, {}, {}), ArgumentError);
    CHECK_THROWS_AS(assemble(shape, start, Vec3::Zero(), SfcSequence{{box}}, {}, {}, {}), ArgumentError);
}

TEST_CASE("objective equals the sampled cost") {
    std::mt19937_64 rng(21);
    const HorizonShape shape;
    const SfcSequence sfc{std::vector<AxisBox>(5, AxisBox{Vec3::Constant(-9), Vec3::Constant(9)})};
    const Vec3 goal(0.3, -0.2, 1.0);
    CostWeights w;
    w.goal = {1.0, 1.0, 1.0, 1.0, 2.0};
    w.jerk = 0.01;
    const QpProblem qp = assemble(shape, InitialState{}, goal, sfc, {}, DynamicLimits{}, w);
    const oracle::GaussLegendre gl;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd x = random_vector(rng, 90);
        const auto traj = unpack(x, shape, 0.0);
        double cost = 0.0;
        for (int m = 0; m < 5; ++m) {
            cost += w.goal[m] * (traj.segment(m).control_points().back() - goal).squaredNorm();
            const auto& pts = traj.segment(m).control_points();
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                Vec3 jerk = Vec3::Zero();
                for (int l = 0; l <= 5; ++l) jerk += oracle::bernstein_derivative(l, 5, 3, gl.nodes[k]) * pts[l];
                jerk /= std::pow(0.2, 3);
                cost += w.jerk * gl.weights[k] * 0.2 * jerk.squaredNorm();
            }
        }
        CHECK(qp.objective(x) == doctest::Approx(cost).epsilon(1e-10));
    }
}
