#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace lsc {

using Vec3 = Eigen::Vector3d;

// Error taxonomy. Every failure that a caller may want to branch on has its
// own type; all derive from std::runtime_error except argument errors.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InfeasibleSeedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SafetyDegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GoalUnreachableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepAbortError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedDisturbanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lsc
