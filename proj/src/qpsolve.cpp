#include "lsc/qpsolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

namespace lsc {

double QpProblem::objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(hessian * x) + linear.dot(x) + constant;
}

void QpProblem::validate() const {
    const int n = dimension();
    if (hessian.rows() != n || hessian.cols() != n) throw ArgumentError("hessian size mismatch");
    if (eq_matrix.rows() != eq_rhs.size() || (eq_matrix.rows() > 0 && eq_matrix.cols() != n)) {
        throw ArgumentError("equality block size mismatch");
    }
    if (in_matrix.rows() != in_rhs.size() || (in_matrix.rows() > 0 && in_matrix.cols() != n)) {
        throw ArgumentError("inequality block size mismatch");
    }
    if (!in_kinds.empty() && static_cast<Eigen::Index>(in_kinds.size()) != in_rhs.size()) {
        throw ArgumentError("row kind count mismatch");
    }
    const double asym = (hessian - hessian.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, hessian.cwiseAbs().maxCoeff())) {
        throw ArgumentError("hessian is not symmetric");
    }
}

const char* to_string(QpStatus status) {
    switch (status) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::Infeasible: return "infeasible";
        case QpStatus::IterationLimit: return "iteration-limit";
        case QpStatus::Inaccurate: return "inaccurate";
    }
    return "unknown";
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Goldfarb-Idnani dual active-set method for
//   min 1/2 y'Gy + g'y  s.t.  C y >= d   (rows of C have unit norm).
// J and R follow the factorization of Goldfarb & Idnani (1983): G = L L',
// J = L^{-T} Q, with the leading q columns of Q spanning the active normals.
class DualActiveSet {
public:
    DualActiveSet(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& d, double feasibility_tol)
        : n_(static_cast<int>(g.size())), C_(C), d_(d), tol_(feasibility_tol) {
        J_ = chol_lower.transpose().triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(n_, n_));
        R_ = Eigen::MatrixXd::Zero(n_, n_);
        Eigen::VectorXd rhs = -g;
        chol_lower.triangularView<Eigen::Lower>().solveInPlace(rhs);
        chol_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
        y_ = rhs;
        in_active_.assign(C_.rows(), false);
    }

    QpStatus run(int max_iterations, int& iterations) {
        iterations = 0;
        while (true) {
            if (iterations >= max_iterations) return QpStatus::IterationLimit;
            ++iterations;

            // Step 1: most violated inactive constraint (lowest index on ties).
            int p = -1;
            double worst = -tol_;
            for (int i = 0; i < C_.rows(); ++i) {
                if (in_active_[i]) continue;
                const double s = C_.row(i).dot(y_) - d_[i];
                if (s < worst) {
                    worst = s;
                    p = i;
                }
            }
            if (p < 0) return QpStatus::Optimal;

            double u_new = 0.0;
            const Eigen::VectorXd np = C_.row(p).transpose();
            while (true) {
                const int q = static_cast<int>(active_.size());
                const Eigen::VectorXd dvec = J_.transpose() * np;
                const Eigen::VectorXd z = J_.rightCols(n_ - q) * dvec.tail(n_ - q);
                Eigen::VectorXd r(q);
                if (q > 0) {
                    r = R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(dvec.head(q));
                }

                double t1 = std::numeric_limits<double>::infinity();
                int drop = -1;
                for (int k = 0; k < q; ++k) {
                    if (r[k] > 0.0 && u_[k] / r[k] < t1) {
                        t1 = u_[k] / r[k];
                        drop = k;
                    }
                }
                // z . np equals |d2|^2; a vanishing d2 means np is spanned by the active normals.
                double t2 = std::numeric_limits<double>::infinity();
                const double zn = dvec.tail(n_ - q).squaredNorm();
                if (zn > 1e-24 * dvec.squaredNorm()) {
                    const double slack = np.dot(y_) - d_[p];
                    t2 = -slack / zn;
                }
                const double t = std::min(t1, t2);
                if (!std::isfinite(t)) return QpStatus::Infeasible;

                if (!std::isfinite(t2)) {
                    // Dual step only: the new normal is dependent on the active set.
                    for (int k = 0; k < q; ++k) u_[k] -= t * r[k];
                    u_new += t;
                    remove_active(drop);
                    if (++iterations > max_iterations) return QpStatus::IterationLimit;
                    continue;
                }

                y_ += t * z;
                for (int k = 0; k < q; ++k) u_[k] -= t * r[k];
                u_new += t;

                if (t2 <= t1) {
                    if (!add_active(dvec)) return QpStatus::Infeasible;
                    active_.push_back(p);
                    u_.conservativeResize(q + 1);
                    u_[q] = u_new;
                    in_active_[p] = true;
                    break;
                }
                remove_active(drop);
                if (++iterations > max_iterations) return QpStatus::IterationLimit;
            }
        }
    }

    const Eigen::VectorXd& solution() const { return y_; }
    const std::vector<int>& active() const { return active_; }
    const Eigen::VectorXd& multipliers() const { return u_; }

private:
    bool add_active(Eigen::VectorXd dvec) {
        const int q = static_cast<int>(active_.size());
        for (int j = n_ - 1; j >= q + 1; --j) {
            double cc = dvec[j - 1];
            double ss = dvec[j];
            const double h = std::hypot(cc, ss);
            if (h < kEps) continue;
            dvec[j] = 0.0;
            ss /= h;
            cc /= h;
            if (cc < 0.0) {
                cc = -cc;
                ss = -ss;
                dvec[j - 1] = -h;
            } else {
                dvec[j - 1] = h;
            }
            const double xny = ss / (1.0 + cc);
            for (int k = 0; k < n_; ++k) {
                const double a = J_(k, j - 1);
                const double b = J_(k, j);
                J_(k, j - 1) = a * cc + b * ss;
                J_(k, j) = xny * (a + J_(k, j - 1)) - b;
            }
        }
        R_.col(q).head(q + 1) = dvec.head(q + 1);
        if (std::abs(dvec[q]) <= kEps * r_norm_) return false;
        r_norm_ = std::max(r_norm_, std::abs(dvec[q]));
        return true;
    }

    void remove_active(int pos) {
        const int q = static_cast<int>(active_.size());
        in_active_[active_[pos]] = false;
        for (int i = pos; i < q - 1; ++i) {
            active_[i] = active_[i + 1];
            u_[i] = u_[i + 1];
            R_.col(i) = R_.col(i + 1);
        }
        active_.pop_back();
        u_.conservativeResize(q - 1);
        R_.col(q - 1).setZero();
        const int nq = q - 1;
        for (int j = pos; j < nq; ++j) {
            double cc = R_(j, j);
            double ss = R_(j + 1, j);
            const double h = std::hypot(cc, ss);
            if (h < kEps) continue;
            cc /= h;
            ss /= h;
            R_(j + 1, j) = 0.0;
            if (cc < 0.0) {
                R_(j, j) = -h;
                cc = -cc;
                ss = -ss;
            } else {
                R_(j, j) = h;
            }
            const double xny = ss / (1.0 + cc);
            for (int k = j + 1; k < nq; ++k) {
                const double a = R_(j, k);
                const double b = R_(j + 1, k);
                R_(j, k) = a * cc + b * ss;
                R_(j + 1, k) = xny * (a + R_(j, k)) - b;
            }
            for (int k = 0; k < n_; ++k) {
                const double a = J_(k, j);
                const double b = J_(k, j + 1);
                J_(k, j) = a * cc + b * ss;
                J_(k, j + 1) = xny * (J_(k, j) + a) - b;
            }
        }
    }

    int n_;
    const Eigen::MatrixXd& C_;
    const Eigen::VectorXd& d_;
    double tol_;
    Eigen::MatrixXd J_;
    Eigen::MatrixXd R_;
    Eigen::VectorXd y_;
    Eigen::VectorXd u_;
    std::vector<int> active_;
    std::vector<bool> in_active_;
    double r_norm_ = 1.0;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

ResidualReport check_candidate(const QpProblem& problem, const Eigen::VectorXd& candidate) {
    if (candidate.size() != problem.dimension()) throw ArgumentError("candidate dimension mismatch");
    ResidualReport report;
    report.min_slack_by_kind.fill(std::numeric_limits<double>::infinity());
    if (problem.eq_matrix.rows() > 0) {
        report.max_equality_residual = max_abs(problem.eq_matrix * candidate - problem.eq_rhs);
    }
    if (problem.in_matrix.rows() > 0) {
        const Eigen::VectorXd slack = problem.in_rhs - problem.in_matrix * candidate;
        for (Eigen::Index i = 0; i < slack.size(); ++i) {
            const double violation = std::max(0.0, -slack[i]);
            report.max_inequality_violation = std::max(report.max_inequality_violation, violation);
            if (!problem.in_kinds.empty()) {
                const auto kind = static_cast<int>(problem.in_kinds[i]);
                report.max_violation_by_kind[kind] = std::max(report.max_violation_by_kind[kind], violation);
                report.min_slack_by_kind[kind] = std::min(report.min_slack_by_kind[kind], slack[i]);
                ++report.rows_by_kind[kind];
            }
        }
    }
    return report;
}

QpSolution solve(const QpProblem& problem, const SolveOptions& options) {
    problem.validate();
    const int n = problem.dimension();
    QpSolution out;
    out.values = Eigen::VectorXd::Zero(n);

    // Null-space parametrization x = x0 + Z y of the equality constraints.
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(n, n);
    if (problem.eq_matrix.rows() > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.eq_matrix.transpose());
        const int rank = static_cast<int>(qr.rank());
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
        Z = Q.rightCols(n - rank);
        x0 = problem.eq_matrix.completeOrthogonalDecomposition().solve(problem.eq_rhs);
        if (max_abs(problem.eq_matrix * x0 - problem.eq_rhs) > options.tolerance) {
            out.values = x0;
            out.status = QpStatus::Infeasible;
            return out;
        }
    }
    const int nr = static_cast<int>(Z.cols());

    Eigen::MatrixXd G = Z.transpose() * problem.hessian * Z;
    G = 0.5 * (G + G.transpose());
    const Eigen::VectorXd g = Z.transpose() * (problem.hessian * x0 + problem.linear);

    Eigen::LLT<Eigen::MatrixXd> llt(G);
    const auto pivot_ratio = [&] {
        const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
        return nr == 0 ? 1.0 : diag.minCoeff() / std::max(diag.maxCoeff(), 1e-300);
    };
    if (llt.info() != Eigen::Success || pivot_ratio() < 1e-10) {
        G += 1e-9 * Eigen::MatrixXd::Identity(nr, nr);
        llt.compute(G);
        out.regularized = true;
        if (llt.info() != Eigen::Success) {
            out.status = QpStatus::Infeasible;
            return out;
        }
    }

    // Reduced rows: slack = b - a x = (-a Z) y - (a x0 - b) >= 0, normalized.
    const Eigen::Index m = problem.in_matrix.rows();
    std::vector<Eigen::Index> kept;
    std::vector<double> row_scale;
    Eigen::MatrixXd C(m, nr);
    Eigen::VectorXd d(m);
    Eigen::Index rows = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::RowVectorXd ci = -problem.in_matrix.row(i) * Z;
        const double di = problem.in_matrix.row(i).dot(x0) - problem.in_rhs[i];
        const double norm = ci.norm();
        if (norm <= 1e-12 * std::max(1.0, problem.in_matrix.row(i).norm())) {
            if (-di < -options.tolerance) {
                out.values = x0;
                out.status = QpStatus::Infeasible;
                return out;
            }
            continue;
        }
        C.row(rows) = ci / norm;
        d[rows] = di / norm;
        kept.push_back(i);
        row_scale.push_back(norm);
        ++rows;
    }
    C.conservativeResize(rows, nr);
    d.conservativeResize(rows);

    DualActiveSet solver(llt.matrixL(), g, C, d, 1e-12);
    out.status = solver.run(options.max_iterations, out.iterations);
    const Eigen::VectorXd y = solver.solution();
    out.values = x0 + Z * y;
    out.objective = problem.objective(out.values);

    const ResidualReport report = check_candidate(problem, out.values);
    out.max_equality_residual = report.max_equality_residual;
    out.max_inequality_violation = report.max_inequality_violation;

    // Stationarity: H x + f + A_in' mu + A_eq' lambda = 0 with lambda fitted.
    Eigen::VectorXd mu_term = Eigen::VectorXd::Zero(n);
    const auto& active = solver.active();
    const auto& u = solver.multipliers();
    for (std::size_t k = 0; k < active.size(); ++k) {
        const Eigen::Index row = kept[active[k]];
        mu_term += (u[static_cast<Eigen::Index>(k)] / row_scale[active[k]]) *
                   problem.in_matrix.row(row).transpose();
    }
    const Eigen::VectorXd hx = problem.hessian * out.values;
    Eigen::VectorXd w = hx + problem.linear + mu_term;
    if (problem.eq_matrix.rows() > 0) {
        const Eigen::VectorXd lambda =
            problem.eq_matrix.transpose().colPivHouseholderQr().solve(-w);
        w += problem.eq_matrix.transpose() * lambda;
    }
    const double scale = std::max({1.0, max_abs(hx), max_abs(problem.linear), max_abs(mu_term)});
    out.stationarity_residual = max_abs(w) / scale;

    if (out.status == QpStatus::Optimal &&
        (out.max_equality_residual > options.tolerance || out.max_inequality_violation > options.tolerance ||
         out.stationarity_residual > options.tolerance)) {
        out.status = QpStatus::Inaccurate;
    }
    return out;
}

// --- trajectory problem --------------------------------------------------

InitialState initial_state_of(const PiecewiseTrajectory& traj) {
    const double t = traj.start_time();
    return {eval(traj, t), eval_derivative(traj, t, 1), eval_derivative(traj, t, 2)};
}

Eigen::VectorXd pack(const PiecewiseTrajectory& traj) {
    const int n = traj.degree();
    Eigen::VectorXd x(3 * traj.num_segments() * (n + 1));
    for (int m = 0; m < traj.num_segments(); ++m)
        for (int l = 0; l <= n; ++l)
            x.segment<3>(variable_index(n, m, l, 0)) = traj.segment(m).control_point(l);
    return x;
}

PiecewiseTrajectory unpack(const Eigen::VectorXd& x, const HorizonShape& shape, double start_time) {
    const int n = shape.degree;
    if (x.size() != 3 * shape.segments * (n + 1)) throw ArgumentError("decision vector size mismatch");
    std::vector<BernsteinSegment> segments;
    segments.reserve(shape.segments);
    for (int m = 0; m < shape.segments; ++m) {
        std::vector<Vec3> points;
        points.reserve(n + 1);
        for (int l = 0; l <= n; ++l) points.emplace_back(x.segment<3>(variable_index(n, m, l, 0)));
        segments.emplace_back(std::move(points), shape.segment_duration);
    }
    return PiecewiseTrajectory(std::move(segments), start_time);
}

namespace {

double choose(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

}  // namespace

Eigen::MatrixXd derivative_gram(int degree, int order) {
    if (degree < 0 || degree > kMaxDegree) throw ArgumentError("unsupported degree");
    if (order < 0) throw ArgumentError("negative derivative order");
    const int n = degree;
    if (order > n) return Eigen::MatrixXd::Zero(n + 1, n + 1);
    const int p = n - order;

    // r-th derivative of b_{l,n} = n!/(n-r)! * sum_k (-1)^(r-k) C(r,k) b_{l-k,n-r}
    double falling = 1.0;
    for (int i = 0; i < order; ++i) falling *= n - i;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, p + 1);
    for (int l = 0; l <= n; ++l)
        for (int k = 0; k <= order; ++k) {
            const int idx = l - k;
            if (idx < 0 || idx > p) continue;
            D(l, idx) += falling * ((order - k) % 2 == 0 ? 1.0 : -1.0) * choose(order, k);
        }
    // integral over [0,1] of b_{a,p} b_{b,p} = C(p,a) C(p,b) / ((2p+1) C(2p, a+b))
    Eigen::MatrixXd P(p + 1, p + 1);
    for (int a = 0; a <= p; ++a)
        for (int b = 0; b <= p; ++b)
            P(a, b) = choose(p, a) * choose(p, b) / ((2 * p + 1) * choose(2 * p, a + b));
    return D * P * D.transpose();
}

QpProblem assemble(const HorizonShape& shape, const InitialState& start, const Vec3& goal,
                   const SfcSequence& sfc, const LscSet& lscs, const DynamicLimits& limits,
                   const CostWeights& weights) {
    const int n = shape.degree;
    const int M = shape.segments;
    const double dt = shape.segment_duration;
    if (n < 3 || n > kMaxDegree) throw ArgumentError("trajectory degree must be in [3, 10]");
    if (M < 1 || !(dt > 0.0)) throw ArgumentError("invalid horizon shape");
    if (static_cast<int>(sfc.boxes.size()) != M) throw ArgumentError("corridor size does not match horizon");
    if (!weights.goal.empty() && static_cast<int>(weights.goal.size()) != M) {
        throw ArgumentError("goal weight count does not match horizon");
    }
    for (const auto& block : lscs) {
        if (block.degree != n || block.segments() != M) throw ArgumentError("LSC block shape mismatch");
    }

    const int dim = 3 * M * (n + 1);
    auto idx = [n](int m, int l, int axis) { return variable_index(n, m, l, axis); };

    QpProblem qp;
    qp.hessian = Eigen::MatrixXd::Zero(dim, dim);
    qp.linear = Eigen::VectorXd::Zero(dim);

    // Jerk energy: integral over each segment of |p'''|^2 = G / dt^5 per axis.
    const Eigen::MatrixXd jerk = derivative_gram(n, 3) * (weights.jerk / std::pow(dt, 5));
    for (int m = 0; m < M; ++m)
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i <= n; ++i)
                for (int j = 0; j <= n; ++j) qp.hessian(idx(m, i, a), idx(m, j, a)) += 2.0 * jerk(i, j);
    // Goal error at every segment end.
    for (int m = 0; m < M; ++m) {
        const double w = weights.goal.empty() ? 1.0 : weights.goal[m];
        for (int a = 0; a < 3; ++a) {
            qp.hessian(idx(m, n, a), idx(m, n, a)) += 2.0 * w;
            qp.linear[idx(m, n, a)] -= 2.0 * w * goal[a];
        }
        qp.constant += w * goal.squaredNorm();
    }

    // Equalities, written in control-point units.
    const int eq_rows = 9 + 9 * (M - 1) + 3 * n;
    qp.eq_matrix = Eigen::MatrixXd::Zero(eq_rows, dim);
    qp.eq_rhs = Eigen::VectorXd::Zero(eq_rows);
    int row = 0;
    const double vel_scale = dt / n;
    const double acc_scale = dt * dt / (n * (n - 1));
    for (int a = 0; a < 3; ++a) {
        qp.eq_matrix(row, idx(0, 0, a)) = 1.0;
        qp.eq_rhs[row++] = start.position[a];
        qp.eq_matrix(row, idx(0, 1, a)) = 1.0;
        qp.eq_matrix(row, idx(0, 0, a)) = -1.0;
        qp.eq_rhs[row++] = start.velocity[a] * vel_scale;
        qp.eq_matrix(row, idx(0, 2, a)) = 1.0;
        qp.eq_matrix(row, idx(0, 1, a)) = -2.0;
        qp.eq_matrix(row, idx(0, 0, a)) = 1.0;
        qp.eq_rhs[row++] = start.acceleration[a] * acc_scale;
    }
    for (int m = 0; m + 1 < M; ++m)
        for (int order = 0; order <= 2; ++order)
            for (int a = 0; a < 3; ++a) {
                for (int k = 0; k <= order; ++k) {
                    const double coeff = ((order - k) % 2 == 0 ? 1.0 : -1.0) * choose(order, k);
                    qp.eq_matrix(row, idx(m, n - order + k, a)) += coeff;
                    qp.eq_matrix(row, idx(m + 1, k, a)) -= coeff;
                }
                ++row;
            }
    for (int l = 1; l <= n; ++l)
        for (int a = 0; a < 3; ++a) {
            qp.eq_matrix(row, idx(M - 1, l, a)) = 1.0;
            qp.eq_matrix(row, idx(M - 1, 0, a)) = -1.0;
            ++row;
        }

    // Inequalities.
    int lsc_rows = 0;
    for (const auto& block : lscs) lsc_rows += static_cast<int>(block.rows.size());
    const int in_rows = 2 * 3 * M * n + 2 * 3 * M * (n - 1) + 2 * dim + lsc_rows;
    qp.in_matrix = Eigen::MatrixXd::Zero(in_rows, dim);
    qp.in_rhs = Eigen::VectorXd::Zero(in_rows);
    qp.in_kinds.reserve(in_rows);
    row = 0;
    for (int m = 0; m < M; ++m)
        for (int l = 0; l < n; ++l)
            for (int a = 0; a < 3; ++a)
                for (double sign : {1.0, -1.0}) {
                    qp.in_matrix(row, idx(m, l + 1, a)) = sign;
                    qp.in_matrix(row, idx(m, l, a)) = -sign;
                    qp.in_rhs[row++] = limits.max_velocity[a] * vel_scale;
                    qp.in_kinds.push_back(RowKind::Velocity);
                }
    for (int m = 0; m < M; ++m)
        for (int l = 0; l + 1 < n; ++l)
            for (int a = 0; a < 3; ++a)
                for (double sign : {1.0, -1.0}) {
                    qp.in_matrix(row, idx(m, l + 2, a)) = sign;
                    qp.in_matrix(row, idx(m, l + 1, a)) = -2.0 * sign;
                    qp.in_matrix(row, idx(m, l, a)) = sign;
                    qp.in_rhs[row++] = limits.max_acceleration[a] * acc_scale;
                    qp.in_kinds.push_back(RowKind::Acceleration);
                }
    for (int m = 0; m < M; ++m)
        for (int l = 0; l <= n; ++l)
            for (int a = 0; a < 3; ++a) {
                qp.in_matrix(row, idx(m, l, a)) = 1.0;
                qp.in_rhs[row++] = sfc.boxes[m].max_corner[a];
                qp.in_kinds.push_back(RowKind::Corridor);
                qp.in_matrix(row, idx(m, l, a)) = -1.0;
                qp.in_rhs[row++] = -sfc.boxes[m].min_corner[a];
                qp.in_kinds.push_back(RowKind::Corridor);
            }
    // (x - anchor) . normal - margin >= 0   <=>   -normal . x <= -(normal . anchor + margin)
    for (const auto& block : lscs)
        for (int m = 0; m < M; ++m)
            for (int l = 0; l <= n; ++l) {
                const HalfSpaceConstraint& h = block.at(m, l);
                for (int a = 0; a < 3; ++a) qp.in_matrix(row, idx(m, l, a)) = -h.normal[a];
                qp.in_rhs[row++] = -(h.normal.dot(h.anchor) + h.margin);
                qp.in_kinds.push_back(RowKind::SafeCorridor);
            }
    return qp;
}

}  // namespace lsc
