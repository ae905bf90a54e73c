#pragma once

// Bounded Levenberg-Marquardt for small curve fits. Internal to the library.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ericson::detail {

/// Model value at x; writes d(model)/d(param) into grad. Throws DomainError
/// where the model is undefined, which rejects the trial step.
using ModelFn = std::function<double(double x, std::span<const double> p, std::span<double> grad)>;

struct LeastSquaresProblem {
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> weights; // empty: uniform
    ModelFn model;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct LeastSquaresResult {
    std::vector<double> params;
    std::vector<double> stderr_;
    double rms = 0.0;
    bool converged = false;
    int iterations = 0;
};

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem,
                                       std::vector<double> start, int max_iterations = 200,
                                       double relative_step = 1e-10);

} // namespace ericson::detail
