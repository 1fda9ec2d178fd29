#pragma once

#include "mimic/likelihood.hpp"
#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mimic {

enum class SeMethod { naive, mlm, mlr };

std::string_view to_string(SeMethod method) noexcept;
SeMethod parse_se_method(std::string_view text);

/// Two-sided significance code: *** p < .01, ** p < .05, * p < .1.
enum class Stars { none, one, two, three };

std::string_view to_string(Stars stars) noexcept;

struct FitConfig {
    double gradient_tolerance = 1e-6;   // max-norm of the unconstrained gradient
    double relative_tolerance = 1e-10;  // relative loglik change between iterates
    int max_iterations = 500;
    std::vector<SeMethod> se_methods{SeMethod::naive, SeMethod::mlm, SeMethod::mlr};
    double heywood_threshold = 1e-4;
    std::optional<ParameterSet> start;
};

struct FitResult {
    ParameterSet params;               // identified form, lambda[fixed] = 1
    ParameterSet params_standardized;  // sum(lambda) = 1
    std::vector<std::string> names;    // free-parameter names, same order as the SE vectors
    double loglik = 0.0;
    double loglik_start = 0.0;

    std::optional<Eigen::VectorXd> se_naive;
    std::optional<Eigen::VectorXd> se_mlm;
    std::optional<Eigen::VectorXd> se_mlr;
    std::optional<Eigen::MatrixXd> cov_naive;  // inverse observed information
    std::optional<Eigen::MatrixXd> cov_mlr;    // sandwich
    double mlm_scaling = 1.0;                  // Satorra-Bentler factor applied to cov_naive
    std::vector<Stars> significance;

    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool heywood = false;
    bool information_singular = false;
    std::vector<std::string> warnings;

    /// Free parameters on the natural scale.
    [[nodiscard]] Eigen::VectorXd estimates(const ModelSpec& spec) const { return pack(spec, params, Scale::natural); }
};

/// Deterministic starting point: free loadings 1, beta from OLS of the fixed
/// indicator on X, theta from per-indicator OLS residual SDs, sigma 0.5.
ParameterSet initial_parameters(const Dataset& data, const ModelSpec& spec);

/// Maximum-likelihood fit under fixed-x normality. Never throws on
/// non-convergence; check `converged`.
FitResult fit_ml(const Dataset& data, const ModelSpec& spec, const FitConfig& config = {});

/// Observed information (negative Hessian of the loglik) on the natural
/// scale, by central differences of the analytic gradient.
Eigen::MatrixXd observed_information(const Dataset& data, const ModelSpec& spec, const ParameterSet& params);

/// Satorra-Bentler scaling factor tr(U Gamma) / df on the moment vector
/// (vec Pi, vech Omega). Equals 1 in expectation under normality.
struct SatorraBentler {
    double scaling = 1.0;
    double trace = 0.0;
    std::size_t df = 0;
};
SatorraBentler satorra_bentler(const Dataset& data, const ModelSpec& spec, const ParameterSet& params);

/// Standard errors of the free parameters by the requested method.
/// Throws SingularityError when the information matrix is not positive
/// definite and SchemaError when N is too small for fourth moments (mlm).
Eigen::VectorXd robust_se(const Dataset& data, const ModelSpec& spec, const FitResult& fit, SeMethod method);

/// Stars from the two-sided normal p-value of estimate / max(se).
/// Non-positive or non-finite SEs are ignored.
Stars significance_stars(double estimate, std::span<const double> standard_errors);
double two_sided_p_value(double z);

/// Jacobian of the standardized parameters (all p loadings, beta, theta,
/// sigma; length 2p + k + 1) with respect to the free natural parameters.
Eigen::MatrixXd standardized_jacobian(const ModelSpec& spec, const ParameterSet& params);

}  // namespace mimic
