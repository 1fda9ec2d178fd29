#pragma once

#include <Eigen/Dense>

#include <functional>

namespace mimic::detail {

/// Objective callback: fills value and gradient, returns false when the point
/// is infeasible (the line search then backs off).
using Objective = std::function<bool(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& gradient)>;

struct OptimOptions {
    double gradient_tolerance = 1e-6;
    double relative_tolerance = 1e-10;
    int max_iterations = 500;
};

struct OptimResult {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool converged = false;
};

/// BFGS with Armijo backtracking, followed by damped Newton polishing on a
/// finite-difference Hessian if the gradient test has not been met.
OptimResult minimize(const Objective& f, Eigen::VectorXd x0, const OptimOptions& options);

/// Central-difference Jacobian of a gradient callback, symmetrized.
Eigen::MatrixXd finite_difference_hessian(const Objective& f, const Eigen::VectorXd& x, double relative_step = 1e-5);

}  // namespace mimic::detail
