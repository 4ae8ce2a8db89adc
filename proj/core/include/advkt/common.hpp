#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace advkt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Error taxonomy used across the pipeline. The CLI maps ParseError /
// ValidationError / ContractError to exit code 1 and everything else to 2.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken API precondition (length mismatch, empty score set, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct LookupError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Non-finite loss during training.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Clamp applied before every log() on probabilities.
inline constexpr double kProbEps = 1e-7;

}  // namespace advkt
