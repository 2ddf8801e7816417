// Command line front end: generate scenarios, run missions, check logs.
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "lsc/sim.hpp"

namespace {

enum Exit { kOk = 0, kMissionFailed = 1, kSafetyViolation = 2, kConfigError = 3 };

void print_report(const lsc::VerificationReport& r) {
    std::printf("steps %d\n", r.steps);
    std::printf("min pair distance %.9f (margin %.3e)\n", r.min_pair_distance, r.min_pair_margin);
    std::printf("min planned pair margin %.3e\n", r.min_horizon_pair_margin);
    std::printf("min obstacle clearance %.3e\n", r.min_obstacle_clearance);
    std::printf("max replan / knot discontinuity %.3e / %.3e\n", r.max_replan_discontinuity,
                r.max_knot_discontinuity);
    std::printf("max velocity / acceleration excess %.3e / %.3e\n", r.max_velocity_excess,
                r.max_acceleration_excess);
    std::printf("max log mismatch %.3e\n", r.max_log_mismatch);
    std::printf("violations %d\n", r.violations);
    for (const auto& m : r.messages) std::printf("  %s\n", m.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-quadrotor trajectory planning with linear safe corridors"};
    app.require_subcommand(1);

    std::string kind = "empty";
    int agents = 10;
    std::uint64_t seed = 0;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a scenario file");
    gen->add_option("--kind", kind, "empty, forest, indoor or circle")
        ->check(CLI::IsMember({"empty", "forest", "indoor", "circle"}));
    gen->add_option("--agents", agents, "Number of agents")->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--out", gen_out, "Output scenario file")->required();

    std::string scenario_path, run_out;
    int threads = 1;
    double timeout = 0.0;
    auto* run = app.add_subcommand("run", "Run a scenario and write logs");
    run->add_option("--scenario", scenario_path, "Scenario file")->required();
    run->add_option("--out", run_out, "Log directory")->required();
    run->add_option("--threads", threads, "Planner threads")->check(CLI::PositiveNumber);
    auto* timeout_opt = run->add_option("--timeout", timeout, "Mission timeout in seconds")->check(CLI::PositiveNumber);

    std::string log_dir;
    auto* check = app.add_subcommand("check", "Verify the logs of a run");
    check->add_option("--log", log_dir, "Log directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*gen) {
            const auto scenario = lsc::generate_scenario(lsc::parse_scenario_kind(kind), agents, seed);
            scenario.save(gen_out);
            std::printf("wrote %s (%zu agents)\n", gen_out.c_str(), scenario.agents.size());
            return kOk;
        }
        if (*run) {
            const auto scenario = lsc::Scenario::load(scenario_path);
            lsc::RunOptions options;
            options.threads = threads;
            if (*timeout_opt) options.timeout = timeout;
            const auto m = lsc::run(scenario, run_out, options);
            std::printf("success %s, flight time %.2f s, steps %d, fallbacks %d, mean plan %.2f ms\n",
                        m.success ? "yes" : "no", m.flight_time, m.steps, m.fallback_count, m.mean_compute_ms);
            if (m.aborted) std::printf("aborted: %s\n", m.abort_reason.c_str());
            if (m.deadlock) std::printf("deadlock detected\n");
            print_report(m.verification);
            if (m.verification.violations > 0) return kSafetyViolation;
            return m.success ? kOk : kMissionFailed;
        }
        if (*check) {
            const auto report = lsc::verify(log_dir);
            print_report(report);
            return report.violations > 0 ? kSafetyViolation : kOk;
        }
    } catch (const lsc::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    } catch (const lsc::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    } catch (const lsc::GenerationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
    return kOk;
}
