// Offline verifier. Deliberately self-contained: it evaluates the logged
// control points with its own de Casteljau code rather than the planner's
// Bernstein module.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsc/sim.hpp"

namespace lsc {

namespace {

using json = nlohmann::json;
using Points = std::vector<Vec3>;

constexpr double kSampleRate = 100.0;
constexpr int kMaxMessages = 20;

struct LoggedPlan {
    double start = 0.0;
    double duration = 0.0;
    std::vector<Points> segments;
};

struct Agent {
    double radius = 0.0;
};

struct Context {
    std::vector<Agent> agents;
    double downwash = 1.0;
    Vec3 vmax, amax;
    AxisBox bounds;
    std::vector<AxisBox> boxes;
    std::vector<std::vector<LoggedPlan>> plans;  // [step][agent]
};

Vec3 casteljau(Points pts, double tau) {
    for (std::size_t r = 1; r < pts.size(); ++r)
        for (std::size_t i = 0; i + r < pts.size(); ++i) pts[i] = (1.0 - tau) * pts[i] + tau * pts[i + 1];
    return pts.front();
}

Points hodograph(const Points& pts, double duration) {
    Points out;
    const double k = static_cast<double>(pts.size() - 1) / duration;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) out.push_back(k * (pts[i + 1] - pts[i]));
    return out;
}

// Position, velocity and acceleration of one segment at local tau.
std::array<Vec3, 3> segment_state(const Points& pts, double duration, double tau) {
    const Points d1 = hodograph(pts, duration);
    const Vec3 a = d1.size() >= 2 ? casteljau(hodograph(d1, duration), tau) : Vec3::Zero();
    return {casteljau(pts, tau), d1.empty() ? Vec3::Zero() : casteljau(d1, tau), a};
}

std::array<Vec3, 3> plan_state(const LoggedPlan& plan, double t) {
    const int m_count = static_cast<int>(plan.segments.size());
    double s = (t - plan.start) / plan.duration;
    int m = static_cast<int>(std::floor(s));
    m = std::clamp(m, 0, m_count - 1);
    double tau = std::clamp(s - m, 0.0, 1.0);
    return segment_state(plan.segments[m], plan.duration, tau);
}

Vec3 read_vec(const json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
    Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    if (!v.allFinite()) throw FormatError("non-finite value in log");
    return v;
}

double scaled_norm(const Vec3& d, double downwash) {
    return std::sqrt(d.x() * d.x() + d.y() * d.y() + (d.z() / downwash) * (d.z() / downwash));
}

double box_distance(const AxisBox& b, const Vec3& p) {
    const Vec3 d = (b.min_corner - p).cwiseMax(p - b.max_corner).cwiseMax(Vec3::Zero());
    return d.norm();
}

class Reporter {
public:
    explicit Reporter(VerificationReport& r) : r_(r) {}
    void fail(const std::string& msg) {
        ++r_.violations;
        if (static_cast<int>(r_.messages.size()) < kMaxMessages) r_.messages.push_back(msg);
    }

private:
    VerificationReport& r_;
};

Context load_context(const std::filesystem::path& dir) {
    Context ctx;
    std::ifstream in(dir / "scenario.json");
    if (!in) throw FormatError("missing scenario.json");
    json sc;
    try {
        in >> sc;
        const json& params = sc.at("params");
        ctx.downwash = params.at("downwash").get<double>();
        ctx.vmax = read_vec(params.at("max_vel"));
        ctx.amax = read_vec(params.at("max_acc"));
        const json& map = sc.at("map");
        ctx.bounds = {read_vec(map.at("bounds").at("min")), read_vec(map.at("bounds").at("max"))};
        for (const auto& b : map.value("boxes", json::array())) ctx.boxes.push_back({read_vec(b.at("min")), read_vec(b.at("max"))});
        for (const auto& a : sc.at("agents")) ctx.agents.push_back({a.at("radius").get<double>()});
    } catch (const json::exception& e) {
        throw FormatError(std::string("scenario.json: ") + e.what());
    }
    if (ctx.agents.empty()) throw FormatError("scenario.json lists no agents");
    return ctx;
}

void load_plans(const std::filesystem::path& dir, Context& ctx) {
    std::ifstream in(dir / "plans.jsonl");
    if (!in) throw FormatError("missing plans.jsonl");
    std::string text;
    bool done = false;
    int line_no = 0;
    int degree = -1, segs = -1;
    while (std::getline(in, text)) {
        ++line_no;
        if (done) throw FormatError("plans.jsonl: records after the done marker");
        json j;
        try {
            j = json::parse(text);
            if (j.value("done", false)) {
                if (j.at("steps").get<int>() != static_cast<int>(ctx.plans.size())) {
                    throw FormatError("plans.jsonl: step count does not match the done marker");
                }
                done = true;
                continue;
            }
            if (j.at("step").get<int>() != static_cast<int>(ctx.plans.size())) {
                throw FormatError("plans.jsonl: steps are not consecutive at line " + std::to_string(line_no));
            }
            const json& agents = j.at("agents");
            if (agents.size() != ctx.agents.size()) throw FormatError("plans.jsonl: wrong agent count");
            std::vector<LoggedPlan> step;
            for (const auto& a : agents) {
                LoggedPlan p;
                p.start = a.at("start_time").get<double>();
                p.duration = a.at("duration").get<double>();
                if (!(p.duration > 0.0)) throw FormatError("plans.jsonl: non-positive segment duration");
                for (const auto& seg : a.at("control_points")) {
                    Points pts;
                    for (const auto& c : seg) pts.push_back(read_vec(c));
                    if (pts.empty()) throw FormatError("plans.jsonl: empty segment");
                    if (degree < 0) degree = static_cast<int>(pts.size()) - 1;
                    if (static_cast<int>(pts.size()) != degree + 1) throw FormatError("plans.jsonl: inconsistent degree");
                    p.segments.push_back(std::move(pts));
                }
                if (segs < 0) segs = static_cast<int>(p.segments.size());
                if (static_cast<int>(p.segments.size()) != segs || segs == 0) {
                    throw FormatError("plans.jsonl: inconsistent segment count");
                }
                step.push_back(std::move(p));
            }
            ctx.plans.push_back(std::move(step));
        } catch (const json::exception& e) {
            throw FormatError("plans.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!done) throw FormatError("plans.jsonl is truncated (no done marker)");
}

// Rows are t, p, v, a.
std::vector<std::array<double, 10>> load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing " + path.filename().string());
    std::string line;
    if (!std::getline(in, line) || line != "t,px,py,pz,vx,vy,vz,ax,ay,az") {
        throw FormatError(path.filename().string() + ": bad header");
    }
    std::vector<std::array<double, 10>> rows;
    while (std::getline(in, line)) {
        std::array<double, 10> row{};
        std::istringstream ss(line);
        std::string cell;
        int k = 0;
        while (std::getline(ss, cell, ',')) {
            if (k >= 10) throw FormatError(path.filename().string() + ": too many columns");
            try {
                std::size_t used = 0;
                row[k] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw FormatError(path.filename().string() + ": bad number '" + cell + "'");
            }
            ++k;
        }
        if (k != 10) throw FormatError(path.filename().string() + ": truncated row");
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

VerificationReport verify(const std::filesystem::path& log_dir, const VerifyTolerances& tol) {
    Context ctx = load_context(log_dir);
    load_plans(log_dir, ctx);

    VerificationReport report;
    Reporter rep(report);
    const int n = static_cast<int>(ctx.agents.size());
    const int steps = static_cast<int>(ctx.plans.size());
    report.steps = steps;
    const double inf = std::numeric_limits<double>::infinity();
    report.min_pair_distance = inf;
    report.min_pair_margin = inf;
    report.min_horizon_pair_margin = inf;
    report.min_obstacle_clearance = inf;

    // Executed samples.
    std::vector<std::vector<std::array<double, 10>>> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = load_csv(log_dir / ("agent_" + std::to_string(i) + ".csv"));
    const double dt = steps > 0 ? ctx.plans[0][0].duration : 0.0;
    const std::size_t expected = steps > 0 ? static_cast<std::size_t>(std::lround(steps * dt * kSampleRate)) + 1 : 0;
    for (int i = 0; i < n; ++i) {
        if (rows[i].size() != expected) throw FormatError("agent_" + std::to_string(i) + ".csv has the wrong number of rows");
        for (std::size_t s = 0; s < expected; ++s) {
            if (std::abs(rows[i][s][0] - static_cast<double>(s) / kSampleRate) > 1e-9) {
                throw FormatError("agent_" + std::to_string(i) + ".csv has inconsistent timestamps");
            }
        }
    }
    report.flight_distance.assign(n, 0.0);

    auto pos = [&](int i, std::size_t s) { return Vec3(rows[i][s][1], rows[i][s][2], rows[i][s][3]); };
    auto check_dynamics = [&](const Vec3& v, const Vec3& a, const std::string& where) {
        const double ve = (v.cwiseAbs() - ctx.vmax).maxCoeff();
        const double ae = (a.cwiseAbs() - ctx.amax).maxCoeff();
        report.max_velocity_excess = std::max(report.max_velocity_excess, ve);
        report.max_acceleration_excess = std::max(report.max_acceleration_excess, ae);
        if (ve > tol.dynamics) rep.fail("velocity limit exceeded " + where);
        if (ae > tol.dynamics) rep.fail("acceleration limit exceeded " + where);
    };

    for (std::size_t s = 0; s < expected; ++s) {
        const double t = static_cast<double>(s) / kSampleRate;
        // Which plan produced this sample: the last step whose window covers t.
        const int k = std::min(steps - 1, static_cast<int>(std::floor(t / dt + 1e-9)));
        for (int i = 0; i < n; ++i) {
            const Vec3 p = pos(i, s);
            const Vec3 v(rows[i][s][4], rows[i][s][5], rows[i][s][6]);
            const Vec3 a(rows[i][s][7], rows[i][s][8], rows[i][s][9]);
            if (s > 0) report.flight_distance[i] += (p - pos(i, s - 1)).norm();

            const auto st = plan_state(ctx.plans[k][i], t);
            const double mismatch =
                std::max({(st[0] - p).cwiseAbs().maxCoeff(), (st[1] - v).cwiseAbs().maxCoeff(),
                          (st[2] - a).cwiseAbs().maxCoeff()});
            report.max_log_mismatch = std::max(report.max_log_mismatch, mismatch);
            if (mismatch > tol.log) rep.fail("agent " + std::to_string(i) + " log deviates from plan at t=" + std::to_string(t));

            check_dynamics(v, a, "by agent " + std::to_string(i) + " at t=" + std::to_string(t));

            const double r = ctx.agents[i].radius;
            double clearance = std::min((p - ctx.bounds.min_corner).minCoeff(), (ctx.bounds.max_corner - p).minCoeff()) - r;
            for (const auto& b : ctx.boxes) clearance = std::min(clearance, box_distance(b, p) - r);
            report.min_obstacle_clearance = std::min(report.min_obstacle_clearance, clearance);
            if (clearance < -tol.obstacle) rep.fail("agent " + std::to_string(i) + " hits an obstacle at t=" + std::to_string(t));

            for (int j = 0; j < i; ++j) {
                const double d = scaled_norm(p - pos(j, s), ctx.downwash);
                const double margin = d - (r + ctx.agents[j].radius);
                report.min_pair_distance = std::min(report.min_pair_distance, d);
                report.min_pair_margin = std::min(report.min_pair_margin, margin);
                if (margin < -tol.pair) {
                    rep.fail("agents " + std::to_string(j) + " and " + std::to_string(i) + " collide at t=" + std::to_string(t));
                }
            }
        }
    }

    // Planned horizons.
    for (int k = 0; k < steps; ++k) {
        const auto& step = ctx.plans[k];
        const std::string at = " in step " + std::to_string(k);
        for (int i = 0; i < n; ++i) {
            const auto& plan = step[i];
            if (k > 0) {
                const auto before = plan_state(ctx.plans[k - 1][i], plan.start);
                const auto after = plan_state(plan, plan.start);
                for (int d = 0; d < 3; ++d) {
                    const double jump = (before[d] - after[d]).cwiseAbs().maxCoeff();
                    report.max_replan_discontinuity = std::max(report.max_replan_discontinuity, jump);
                    if (jump > tol.continuity) rep.fail("agent " + std::to_string(i) + " replan discontinuity" + at);
                }
            }
            for (std::size_t m = 1; m < plan.segments.size(); ++m) {
                const auto left = segment_state(plan.segments[m - 1], plan.duration, 1.0);
                const auto right = segment_state(plan.segments[m], plan.duration, 0.0);
                for (int d = 0; d < 3; ++d) {
                    const double jump = (left[d] - right[d]).cwiseAbs().maxCoeff();
                    report.max_knot_discontinuity = std::max(report.max_knot_discontinuity, jump);
                    if (jump > tol.continuity) rep.fail("agent " + std::to_string(i) + " knot discontinuity" + at);
                }
            }
        }
        const auto& p0 = step[0];
        const long first = std::lround(p0.start * kSampleRate);
        const long last = std::lround((p0.start + p0.duration * p0.segments.size()) * kSampleRate);
        std::vector<Vec3> ps(n);
        for (long s = first; s <= last; ++s) {
            const double t = static_cast<double>(s) / kSampleRate;
            for (int i = 0; i < n; ++i) {
                const auto st = plan_state(step[i], t);
                ps[i] = st[0];
                check_dynamics(st[1], st[2], "by plan of agent " + std::to_string(i) + at);
            }
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < i; ++j) {
                    const double margin = scaled_norm(ps[i] - ps[j], ctx.downwash) - (ctx.agents[i].radius + ctx.agents[j].radius);
                    report.min_horizon_pair_margin = std::min(report.min_horizon_pair_margin, margin);
                    if (margin < -tol.pair) {
                        rep.fail("plans of agents " + std::to_string(j) + " and " + std::to_string(i) + " intersect" + at);
                    }
                }
            }
        }
    }
    return report;
}

}  // namespace lsc
