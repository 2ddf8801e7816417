#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "lsc/sim.hpp"

namespace lsc {

namespace {

using json = nlohmann::json;

Vec3 to_vec(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json from_vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json params_to_json(const PlannerParams& p) {
    return {{"degree", p.shape.degree},
            {"segments", p.shape.segments},
            {"dt", p.shape.segment_duration},
            {"downwash", p.downwash},
            {"max_vel", from_vec(p.limits.max_velocity)},
            {"max_acc", from_vec(p.limits.max_acceleration)},
            {"goal_weights", p.weights.goal},
            {"jerk_weight", p.weights.jerk},
            {"d_g", p.goal.goal_threshold},
            {"d_th", p.goal.repulsion_threshold},
            {"d_rep", p.goal.repulsion_distance},
            {"safety_buffer", p.safety_buffer},
            {"qp_tolerance", p.solver.tolerance},
            {"qp_max_iterations", p.solver.max_iterations}};
}

PlannerParams params_from_json(const json& j) {
    PlannerParams p;
    p.shape.degree = j.value("degree", 5);
    p.shape.segments = j.value("segments", 5);
    p.shape.segment_duration = j.value("dt", 0.2);
    p.downwash = j.value("downwash", 2.0);
    if (j.contains("max_vel")) p.limits.max_velocity = to_vec(j.at("max_vel"));
    if (j.contains("max_acc")) p.limits.max_acceleration = to_vec(j.at("max_acc"));
    p.weights.goal = j.value("goal_weights", std::vector<double>(p.shape.segments, 1.0));
    p.weights.jerk = j.value("jerk_weight", 0.01);
    p.goal.goal_threshold = j.value("d_g", 0.1);
    p.goal.repulsion_threshold = j.value("d_th", 0.4);
    p.goal.repulsion_distance = j.value("d_rep", 0.5);
    p.goal.downwash = p.downwash;
    p.safety_buffer = j.value("safety_buffer", 0.0);
    p.solver.tolerance = j.value("qp_tolerance", 1e-6);
    p.solver.max_iterations = j.value("qp_max_iterations", 10000);

    if (p.shape.degree < 3 || p.shape.degree > kMaxDegree) throw ConfigError("degree must be in [3, 10]");
    if (p.shape.segments < 1) throw ConfigError("segments must be positive");
    if (!(p.shape.segment_duration > 0.0)) throw ConfigError("dt must be positive");
    if (!(p.downwash >= 1.0)) throw ConfigError("downwash must be >= 1");
    if ((p.limits.max_velocity.array() <= 0.0).any() || (p.limits.max_acceleration.array() <= 0.0).any()) {
        throw ConfigError("dynamic limits must be positive");
    }
    if (static_cast<int>(p.weights.goal.size()) != p.shape.segments) {
        throw ConfigError("goal_weights needs one entry per segment");
    }
    if (!(p.goal.goal_threshold > 0.0) || !(p.goal.repulsion_distance > 0.0)) {
        throw ConfigError("d_g and d_rep must be positive");
    }
    if (p.safety_buffer < 0.0) throw ConfigError("safety_buffer must be non-negative");
    return p;
}

PlannerParams default_params() {
    PlannerParams p;
    p.weights.goal.assign(p.shape.segments, 1.0);
    p.goal.downwash = p.downwash;
    return p;
}

}  // namespace

void Scenario::validate() const {
    if (agents.empty()) throw ConfigError("scenario has no agents");
    if (!(timeout > 0.0)) throw ConfigError("timeout must be positive");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i];
        if (!(a.radius > 0.0)) throw ConfigError("agent radius must be positive");
        if (!a.start.allFinite() || !a.goal.allFinite()) throw ConfigError("non-finite start or goal");
        if (!point_is_free(map, a.start, a.radius)) {
            throw ConfigError("start of agent " + std::to_string(i) + " is not in free space");
        }
        if (!point_is_free(map, a.goal, a.radius)) {
            throw ConfigError("goal of agent " + std::to_string(i) + " is not in free space");
        }
        for (std::size_t j = 0; j < i; ++j) {
            const EllipsoidModel model(a.radius + agents[j].radius, params.downwash);
            if (model.scaled_norm(a.start - agents[j].start) <= model.radius_sum) {
                throw ConfigError("agents " + std::to_string(j) + " and " + std::to_string(i) +
                                  " start in collision");
            }
        }
    }
}

json Scenario::to_json() const {
    json agents_json = json::array();
    for (const auto& a : agents) {
        agents_json.push_back({{"start", from_vec(a.start)}, {"goal", from_vec(a.goal)}, {"radius", a.radius}});
    }
    return {{"kind", kind},
            {"seed", seed},
            {"timeout", timeout},
            {"map", map.to_json()},
            {"params", params_to_json(params)},
            {"agents", agents_json}};
}

Scenario Scenario::from_json(const json& j, const std::filesystem::path& base_dir) {
    try {
        Scenario s;
        s.kind = j.value("kind", "custom");
        s.seed = j.value("seed", std::uint64_t{0});
        s.timeout = j.value("timeout", 60.0);
        if (j.contains("map")) {
            s.map = OccupancyGrid::from_json(j.at("map"));
        } else if (j.contains("map_file")) {
            std::filesystem::path path = j.at("map_file").get<std::string>();
            if (path.is_relative()) path = base_dir / path;
            s.map = OccupancyGrid::load(path);
        } else {
            throw ConfigError("scenario needs a map or map_file entry");
        }
        s.params = params_from_json(j.value("params", json::object()));
        for (const auto& a : j.at("agents")) {
            s.agents.push_back({to_vec(a.at("start")), to_vec(a.at("goal")), a.value("radius", 0.15)});
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
}

Scenario Scenario::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("scenario " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void Scenario::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "empty") return ScenarioKind::Empty;
    if (name == "forest") return ScenarioKind::Forest;
    if (name == "indoor") return ScenarioKind::Indoor;
    if (name == "circle") return ScenarioKind::Circle;
    throw ConfigError("unknown scenario kind '" + name + "'");
}

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Empty: return "empty";
        case ScenarioKind::Forest: return "forest";
        case ScenarioKind::Indoor: return "indoor";
        case ScenarioKind::Circle: return "circle";
    }
    return "unknown";
}

namespace {

constexpr double kRadius = 0.15;
constexpr int kMaxRetries = 100000;

// Scaled separation required between any two starts or any two goals.
double mission_separation(const PlannerParams&) { return 2.0 * kRadius + 0.2; }

bool separated(const std::vector<Vec3>& points, const Vec3& p, const EllipsoidModel& model, double min_dist) {
    return std::all_of(points.begin(), points.end(),
                       [&](const Vec3& q) { return model.scaled_norm(p - q) > min_dist; });
}

void circle_missions(Scenario& s, int count, double radius, double height) {
    for (int i = 0; i < count; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / count;
        const Vec3 start(radius * std::cos(angle), radius * std::sin(angle), height);
        const Vec3 goal(-start.x(), -start.y(), height);
        s.agents.push_back({start, goal, kRadius});
    }
}

Scenario make_empty(int count, std::mt19937_64& rng) {
    Scenario s;
    s.kind = "empty";
    s.timeout = 30.0;
    s.map = OccupancyGrid(0.1, AxisBox{Vec3(-1.5, -1.5, 0.0), Vec3(1.5, 1.5, 2.0)});
    const double wall = kRadius + 0.15;
    std::uniform_real_distribution<double> ux(-1.5 + wall, 1.5 - wall);
    std::uniform_real_distribution<double> uz(wall, 2.0 - wall);
    const EllipsoidModel model(2.0 * kRadius, s.params.downwash);
    const double sep = mission_separation(s.params);
    std::vector<Vec3> starts, goals;
    int retries = 0;
    auto draw = [&](std::vector<Vec3>& pool) {
        while (true) {
            if (++retries > kMaxRetries) throw GenerationError("cannot place agents with valid clearance");
            const Vec3 p(ux(rng), ux(rng), uz(rng));
            if (separated(pool, p, model, sep)) {
                pool.push_back(p);
                return;
            }
        }
    };
    for (int i = 0; i < count; ++i) draw(starts);
    for (int i = 0; i < count; ++i) draw(goals);
    for (int i = 0; i < count; ++i) s.agents.push_back({starts[i], goals[i], kRadius});
    return s;
}

Scenario make_circle(int count) {
    Scenario s;
    s.kind = "circle";
    s.timeout = 60.0;
    s.map = OccupancyGrid(0.1, AxisBox{Vec3(-5.0, -5.0, 0.0), Vec3(5.0, 5.0, 2.5)});
    circle_missions(s, count, 4.0, 1.0);
    return s;
}

Scenario make_forest(int count, std::mt19937_64& rng) {
    Scenario s;
    s.kind = "forest";
    s.timeout = 60.0;
    circle_missions(s, count, 4.0, 1.0);
    std::uniform_real_distribution<double> upos(-3.0, 3.0);
    std::uniform_real_distribution<double> uside(0.3, 0.6);
    std::vector<AxisBox> columns;
    int retries = 0;
    int attempts = 0;
    while (columns.size() < 10) {
        if (++retries > kMaxRetries) throw GenerationError("cannot place forest columns");
        // Sequential placement can paint itself into a corner; start over.
        if (++attempts > 2000) {
            columns.clear();
            attempts = 0;
        }
        const Vec3 c(upos(rng), upos(rng), 0.0);
        const double half = 0.5 * uside(rng);
        if (c.head<2>().norm() > 3.0) continue;
        const AxisBox box{Vec3(c.x() - half, c.y() - half, 0.0), Vec3(c.x() + half, c.y() + half, 2.5)};
        // Leave at least 1 m between columns so every gap is passable.
        const bool spaced = std::all_of(columns.begin(), columns.end(), [&](const AxisBox& o) {
            const Eigen::Vector2d gap = (o.min_corner.head<2>() - box.max_corner.head<2>())
                                            .cwiseMax(box.min_corner.head<2>() - o.max_corner.head<2>());
            return gap.maxCoeff() >= 1.0;
        });
        if (spaced) columns.push_back(box);
    }
    s.map = OccupancyGrid(0.1, AxisBox{Vec3(-5.0, -5.0, 0.0), Vec3(5.0, 5.0, 2.5)}, columns);
    return s;
}

// Three rooms along y separated by two walls with offset doorways.
std::vector<AxisBox> indoor_walls() {
    return {
        AxisBox{Vec3(0.0, 4.9, 0.0), Vec3(3.0, 5.1, 2.5)},
        AxisBox{Vec3(5.0, 4.9, 0.0), Vec3(10.0, 5.1, 2.5)},
        AxisBox{Vec3(0.0, 9.9, 0.0), Vec3(5.0, 10.1, 2.5)},
        AxisBox{Vec3(7.0, 9.9, 0.0), Vec3(10.0, 10.1, 2.5)},
        AxisBox{Vec3(2.0, 7.4, 0.0), Vec3(2.6, 7.6, 2.5)},
        AxisBox{Vec3(7.4, 7.4, 0.0), Vec3(8.0, 7.6, 2.5)},
    };
}

std::vector<Vec3> indoor_points() {
    std::vector<Vec3> pts;
    for (double y : {1.5, 3.5})
        for (double x : {1.5, 4.0, 6.5, 8.5}) pts.emplace_back(x, y, 1.0);
    for (double x : {1.0, 4.0, 6.0, 9.0}) pts.emplace_back(x, 7.5, 1.0);
    for (double y : {11.5, 13.5})
        for (double x : {1.5, 4.0, 6.5, 8.5}) pts.emplace_back(x, y, 1.0);
    return pts;
}

Scenario make_indoor(int count, std::mt19937_64& rng) {
    Scenario s;
    s.kind = "indoor";
    s.timeout = 60.0;
    s.map = OccupancyGrid(0.1, AxisBox{Vec3(0.0, 0.0, 0.0), Vec3(10.0, 15.0, 2.5)}, indoor_walls());
    const std::vector<Vec3> points = indoor_points();
    if (count > static_cast<int>(points.size())) {
        throw GenerationError("indoor scenario supports at most " + std::to_string(points.size()) + " agents");
    }
    std::vector<int> starts(points.size()), goals(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) starts[i] = goals[i] = static_cast<int>(i);
    for (int retry = 0;; ++retry) {
        if (retry > kMaxRetries) throw GenerationError("cannot assign indoor goals");
        std::shuffle(starts.begin(), starts.end(), rng);
        std::shuffle(goals.begin(), goals.end(), rng);
        bool distinct = true;
        for (int i = 0; i < count; ++i) distinct &= starts[i] != goals[i];
        if (distinct) break;
    }
    for (int i = 0; i < count; ++i) s.agents.push_back({points[starts[i]], points[goals[i]], kRadius});
    return s;
}

}  // namespace

Scenario generate_scenario(ScenarioKind kind, int count, std::uint64_t seed) {
    if (count < 1) throw GenerationError("agent count must be positive");
    std::mt19937_64 rng(seed);
    Scenario s;
    switch (kind) {
        case ScenarioKind::Empty: s = make_empty(count, rng); break;
        case ScenarioKind::Circle: s = make_circle(count); break;
        case ScenarioKind::Forest: s = make_forest(count, rng); break;
        case ScenarioKind::Indoor: s = make_indoor(count, rng); break;
    }
    s.seed = seed;
    s.params = default_params();
    try {
        s.validate();
    } catch (const ConfigError& e) {
        throw GenerationError(std::string("generated scenario is invalid: ") + e.what());
    }
    return s;
}

}  // namespace lsc
