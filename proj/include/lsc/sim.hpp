#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsc/planner.hpp"
#include "lsc/world.hpp"

namespace lsc {

struct AgentMission {
    Vec3 start;
    Vec3 goal;
    double radius = 0.15;
};

struct Scenario {
    std::string kind = "custom";
    OccupancyGrid map{0.1, AxisBox{Vec3(-1.5, -1.5, 0.0), Vec3(1.5, 1.5, 2.0)}};
    std::vector<AgentMission> agents;
    PlannerParams params;
    std::uint64_t seed = 0;
    double timeout = 60.0;

    /// Throws ConfigError unless starts are pairwise separated under the
    /// downwash model and every start/goal is free under its radius.
    void validate() const;

    nlohmann::json to_json() const;
    /// `base_dir` resolves a relative "map_file" entry.
    static Scenario from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static Scenario load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

enum class ScenarioKind { Empty, Forest, Indoor, Circle };

ScenarioKind parse_scenario_kind(const std::string& name);
const char* to_string(ScenarioKind kind);

/// Deterministic scenario for `seed`. Throws GenerationError when clearance
/// cannot be met within the retry budget.
Scenario generate_scenario(ScenarioKind kind, int count, std::uint64_t seed);

struct VerificationReport {
    bool format_ok = true;
    std::string error;
    int violations = 0;
    std::vector<std::string> messages;

    double min_pair_distance = 0.0;       // min |E (p_i - p_j)| over executed samples
    double min_pair_margin = 0.0;         // min |E (p_i - p_j)| - (r_i + r_j)
    double min_horizon_pair_margin = 0.0; // same over every planned horizon
    double min_obstacle_clearance = 0.0;  // min distance to obstacles/bounds minus radius
    double max_replan_discontinuity = 0.0;
    double max_knot_discontinuity = 0.0;
    double max_velocity_excess = 0.0;
    double max_acceleration_excess = 0.0;
    double max_log_mismatch = 0.0;        // CSV rows vs re-sampled plans
    std::vector<double> flight_distance;
    int steps = 0;
};

struct VerifyTolerances {
    double pair = 1e-4;
    double obstacle = 1e-6;
    double continuity = 1e-6;
    double dynamics = 1e-6;
    double log = 1e-6;
};

/// Independent offline check of a run directory. Throws FormatError on
/// missing, malformed, or truncated logs.
VerificationReport verify(const std::filesystem::path& log_dir, const VerifyTolerances& tol = {});

struct RunMetrics {
    bool success = false;
    bool deadlock = false;
    bool aborted = false;
    std::string abort_reason;
    double flight_time = 0.0;
    double sim_time = 0.0;
    int steps = 0;
    int fallback_count = 0;
    double max_candidate_violation = 0.0;  // worst initial-trajectory residual over all steps
    double mean_compute_ms = 0.0;
    double max_compute_ms = 0.0;
    VerificationReport verification;

    nlohmann::json to_json() const;
};

/// Called after every synchronized step with the snapshots all agents
/// planned from and their results (same order).
using StepObserver =
    std::function<void(int step, std::span<const AgentSnapshot>, std::span<const StepResult>)>;

struct RunOptions {
    int threads = 1;
    std::optional<double> timeout;
    StepObserver observer;
};

/// Synchronized replanning with perfect tracking. Writes scenario.json,
/// plans.jsonl, agent_<i>.csv and metrics.json into out_dir; safety figures in
/// the returned metrics come from verify() on those logs.
RunMetrics run(const Scenario& scenario, const std::filesystem::path& out_dir, const RunOptions& options = {});

}  // namespace lsc
