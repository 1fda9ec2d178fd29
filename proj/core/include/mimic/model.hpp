#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mimic {

/// Dimensions and wiring of a single-factor MIMIC model.
///
/// `fixed_loading` is zero-based; the loading at that position is pinned to 1
/// in the identified parameterization.
struct ModelSpec {
    std::vector<std::string> indicator_names;
    std::vector<std::string> cause_names;
    std::size_t fixed_loading = 0;

    [[nodiscard]] std::size_t p() const noexcept { return indicator_names.size(); }
    [[nodiscard]] std::size_t k() const noexcept { return cause_names.size(); }

    /// Free parameters: (p-1) loadings, k structural coefficients, p error SDs, sigma.
    [[nodiscard]] std::size_t free_parameter_count() const noexcept { return 2 * p() + k(); }

    /// Throws SchemaError when an invariant is violated.
    void validate() const;

    static ModelSpec make(std::size_t p, std::size_t k, std::size_t fixed_loading = 0);
};

/// Loadings, structural coefficients and error standard deviations.
struct ParameterSet {
    Eigen::VectorXd lambda;  // p
    Eigen::VectorXd beta;    // k
    Eigen::VectorXd theta;   // p, indicator error SDs
    double sigma = 0.0;      // structural error SD

    void validate(const ModelSpec& spec) const;
};

/// Reduced form y = Pi' x + v with v ~ N(0, Omega).
struct ImpliedMoments {
    Eigen::MatrixXd pi;     // k x p, equals beta * lambda'
    Eigen::MatrixXd omega;  // p x p, equals sigma^2 lambda lambda' + diag(theta^2)
};

/// Column means and sample SDs removed during standardization.
struct ColumnScaling {
    std::vector<double> mean;
    std::vector<double> sd;
};

/// Observations for one period: N x p indicators and N x k causes.
struct Dataset {
    std::vector<std::string> unit_labels;
    Eigen::MatrixXd y;
    Eigen::MatrixXd x;
    std::string period_label;
    std::optional<ColumnScaling> y_scaling;
    std::optional<ColumnScaling> x_scaling;

    [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(y.rows()); }

    /// Shapes against the spec and finiteness.
    void validate_shape(const ModelSpec& spec) const;
    /// validate_shape plus N >= p + k + 1, the minimum for fitting.
    void validate(const ModelSpec& spec) const;
};

ImpliedMoments implied_moments(const ModelSpec& spec, const ParameterSet& params);

/// Rescales to sum(lambda) = 1. Pi and Omega are unchanged.
ParameterSet standardize_loadings(const ParameterSet& params);

/// lambda -> c lambda, beta -> beta / c, sigma -> sigma / |c|. Leaves the
/// reduced form invariant for any c != 0.
ParameterSet rescale_latent(const ParameterSet& params, double c);

/// Brings params into identified form (lambda[fixed] = 1).
ParameterSet identify(const ModelSpec& spec, const ParameterSet& params);

}  // namespace mimic
