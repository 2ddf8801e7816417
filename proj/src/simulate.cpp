#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "lsc/sim.hpp"

namespace lsc {

namespace {

using json = nlohmann::json;

constexpr double kSampleRate = 100.0;
constexpr double kDeadlockWindow = 1.0;
constexpr double kDeadlockSpeed = 0.05;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json trajectory_json(const PiecewiseTrajectory& traj) {
    json segs = json::array();
    for (const auto& seg : traj.segments()) {
        json pts = json::array();
        for (const auto& c : seg.control_points()) pts.push_back(vec_json(c));
        segs.push_back(std::move(pts));
    }
    return segs;
}

json sfc_json(const SfcSequence& sfc) {
    json boxes = json::array();
    for (const auto& b : sfc.boxes) boxes.push_back({{"min", vec_json(b.min_corner)}, {"max", vec_json(b.max_corner)}});
    return boxes;
}

const char* branch_name(GoalBranch b) {
    switch (b) {
        case GoalBranch::Repulsion: return "repulsion";
        case GoalBranch::Path: return "path";
        case GoalBranch::PathIgnoringAgents: return "path_ignoring_agents";
        case GoalBranch::Hold: return "hold";
    }
    return "unknown";
}

long sample_index(double t) { return std::lround(t * kSampleRate); }

void write_sample(std::FILE* f, const PiecewiseTrajectory& traj, long index) {
    const double t = static_cast<double>(index) / kSampleRate;
    const Vec3 p = eval(traj, t);
    const Vec3 v = eval_derivative(traj, t, 1);
    const Vec3 a = eval_derivative(traj, t, 2);
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t, p.x(), p.y(), p.z(), v.x(),
                 v.y(), v.z(), a.x(), a.y(), a.z());
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Runs plan_step for every agent, spreading agents across `threads` workers.
std::vector<StepResult> plan_all(const std::vector<PlannerState>& states, std::span<const AgentSnapshot> snapshots,
                                 const OccupancyGrid& grid, int threads) {
    const int n = static_cast<int>(states.size());
    std::vector<std::optional<StepResult>> results(n);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                results[i] = plan_step(states[i], snapshots, grid);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(threads, 1, n);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    std::vector<StepResult> out;
    out.reserve(n);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

}  // namespace

json RunMetrics::to_json() const {
    const auto& v = verification;
    return {{"success", success},
            {"deadlock", deadlock},
            {"aborted", aborted},
            {"abort_reason", abort_reason},
            {"flight_time", flight_time},
            {"sim_time", sim_time},
            {"steps", steps},
            {"fallback_count", fallback_count},
            {"max_candidate_violation", max_candidate_violation},
            {"mean_compute_ms", mean_compute_ms},
            {"max_compute_ms", max_compute_ms},
            {"verification",
             {{"violations", v.violations},
              {"messages", v.messages},
              {"min_pair_distance", v.min_pair_distance},
              {"min_pair_margin", v.min_pair_margin},
              {"min_horizon_pair_margin", v.min_horizon_pair_margin},
              {"min_obstacle_clearance", v.min_obstacle_clearance},
              {"max_replan_discontinuity", v.max_replan_discontinuity},
              {"max_knot_discontinuity", v.max_knot_discontinuity},
              {"max_velocity_excess", v.max_velocity_excess},
              {"max_acceleration_excess", v.max_acceleration_excess},
              {"max_log_mismatch", v.max_log_mismatch},
              {"flight_distance", v.flight_distance}}}};
}

RunMetrics run(const Scenario& scenario, const std::filesystem::path& out_dir, const RunOptions& options) {
    scenario.validate();
    std::filesystem::create_directories(out_dir);
    scenario.save(out_dir / "scenario.json");

    const int n = static_cast<int>(scenario.agents.size());
    const double dt = scenario.params.shape.segment_duration;
    const double timeout = options.timeout.value_or(scenario.timeout);
    const double d_goal = scenario.params.goal.goal_threshold;

    std::vector<PlannerState> states(n);
    for (int i = 0; i < n; ++i) {
        states[i].id = i;
        states[i].radius = scenario.agents[i].radius;
        states[i].params = scenario.params;
        states[i].params.goal.downwash = scenario.params.downwash;
        states[i].start_time = 0.0;
    }

    std::ofstream plans(out_dir / "plans.jsonl");
    if (!plans) throw ConfigError("cannot write logs into " + out_dir.string());
    std::vector<FilePtr> csv;
    for (int i = 0; i < n; ++i) {
        const auto path = out_dir / ("agent_" + std::to_string(i) + ".csv");
        csv.emplace_back(std::fopen(path.string().c_str(), "w"));
        if (!csv.back()) throw ConfigError("cannot write " + path.string());
        std::fputs("t,px,py,pz,vx,vy,vz,ax,ay,az\n", csv.back().get());
    }

    RunMetrics metrics;
    double compute_total = 0.0;
    long compute_count = 0;
    // Peak speed of the whole swarm per executed step, for deadlock detection.
    std::vector<double> step_peak_speed;

    int step = 0;
    double t_k = 0.0;
    for (; t_k + dt <= timeout + 1e-9; ++step, t_k = step * dt) {
        std::vector<AgentSnapshot> snapshots;
        snapshots.reserve(n);
        for (int i = 0; i < n; ++i) {
            snapshots.push_back(make_snapshot(i, states[i].radius, scenario.agents[i].goal,
                                              states[i].previous_trajectory, scenario.agents[i].start));
        }

        std::vector<StepResult> results;
        try {
            results = plan_all(states, snapshots, scenario.map, options.threads);
        } catch (const StepAbortError& e) {
            metrics.aborted = true;
            metrics.abort_reason = e.what();
            break;
        }
        if (options.observer) options.observer(step, snapshots, results);

        json line = {{"step", step}, {"t", t_k}};
        json agents = json::array();
        bool all_home = true;
        double peak_speed = 0.0;
        const long first = sample_index(t_k);
        const long last = sample_index(t_k + dt);
        for (int i = 0; i < n; ++i) {
            const auto& r = results[i];
            const auto& d = r.diagnostics;
            metrics.fallback_count += d.fallback ? 1 : 0;
            metrics.max_candidate_violation =
                std::max({metrics.max_candidate_violation, d.candidate_report.max_equality_residual,
                          d.candidate_report.max_inequality_violation});
            compute_total += d.compute_ms;
            ++compute_count;
            metrics.max_compute_ms = std::max(metrics.max_compute_ms, d.compute_ms);

            agents.push_back({{"id", i},
                              {"start_time", r.trajectory.start_time()},
                              {"duration", r.trajectory.segment_duration()},
                              {"control_points", trajectory_json(r.trajectory)},
                              {"sfc", sfc_json(r.sfc)},
                              {"goal_curr", vec_json(d.goal.point)},
                              {"branch", branch_name(d.goal.branch)},
                              {"status", to_string(d.status)},
                              {"fallback", d.fallback}});

            for (long s = first; s < last; ++s) write_sample(csv[i].get(), r.trajectory, s);
            for (long s = first; s <= last; ++s) {
                const double t = static_cast<double>(s) / kSampleRate;
                all_home &= (eval(r.trajectory, t) - scenario.agents[i].goal).norm() <= d_goal;
                peak_speed = std::max(peak_speed, eval_derivative(r.trajectory, t, 1).norm());
            }

            states[i].previous_trajectory = r.trajectory;
            states[i].previous_sfc = r.sfc;
        }
        line["agents"] = std::move(agents);
        plans << line.dump() << '\n';
        step_peak_speed.push_back(peak_speed);

        if (all_home) {
            metrics.success = true;
            metrics.flight_time = t_k;
            ++step;
            t_k = step * dt;
            break;
        }
    }

    // Close the executed path with the sample at the final time.
    if (step > 0) {
        for (int i = 0; i < n; ++i) write_sample(csv[i].get(), *states[i].previous_trajectory, sample_index(t_k));
    }
    for (auto& f : csv) f.reset();
    plans << json{{"done", true}, {"steps", step}}.dump() << '\n';
    plans.close();

    metrics.steps = step;
    metrics.sim_time = t_k;
    metrics.mean_compute_ms = compute_count ? compute_total / compute_count : 0.0;
    if (!metrics.success && !metrics.aborted) {
        const int window = static_cast<int>(std::lround(kDeadlockWindow / dt));
        if (static_cast<int>(step_peak_speed.size()) >= window) {
            const double recent = *std::max_element(step_peak_speed.end() - window, step_peak_speed.end());
            metrics.deadlock = recent < kDeadlockSpeed;
        }
    }

    metrics.verification = verify(out_dir);
    std::ofstream(out_dir / "metrics.json") << metrics.to_json().dump(2) << '\n';
    return metrics;
}

}  // namespace lsc
