#pragma once

#include "mimic/estimation.hpp"
#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>

namespace mimic {

struct LoessConfig {
    double span = 0.75;
    int degree = 2;
    int grid_points = 100;
    double z_critical = 1.96;
};

/// Local polynomial fit evaluated on a grid with a pointwise confidence band.
struct CurveEstimate {
    Eigen::VectorXd grid;
    Eigen::VectorXd fitted;
    Eigen::VectorXd ci_lower;
    Eigen::VectorXd ci_upper;
    Eigen::VectorXd standard_error;
    double bandwidth_span = 0.0;
    int degree = 0;
    double residual_sd = 0.0;
    double equivalent_df = 0.0;  // trace of the hat matrix at the data
};

/// Weights l(x0) such that the local fit at x0 equals l(x0)' y. Tricube
/// kernel over the span-nearest neighbours; the window widens until the
/// local design is nonsingular.
Eigen::VectorXd loess_weights(const Eigen::VectorXd& x, double x0, double span, int degree);

/// Default grid: `grid_points` equally spaced values over [min x, max x].
CurveEstimate loess_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const LoessConfig& config = {});

/// Same, on a caller-supplied grid.
CurveEstimate loess_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& grid,
                        const LoessConfig& config);

/// Cause names that carry the GRP polynomial, in power order.
inline constexpr std::array<const char*, 3> kGrpPolynomialCauses{"grp_pc", "grp_pc2", "grp_pc3"};

/// Coefficients (linear, quadratic, cubic) of the GRP polynomial causes.
/// Throws SchemaError when any of the three is absent from the spec.
std::array<double, 3> grp_polynomial_coefficients(const ModelSpec& spec, const ParameterSet& params);

/// b1 g + b2 g^2 + b3 g^3 on the given grid.
Eigen::VectorXd cubic_trend(const std::array<double, 3>& coefficients, const Eigen::VectorXd& grid);
Eigen::VectorXd cubic_trend(const ModelSpec& spec, const FitResult& fit, const Eigen::VectorXd& grid);

/// Model-implied partial relation on a raw-GRP grid when each power was
/// standardized separately: b1 z(g) + b2 z(g^2) + b3 z(g^3).
Eigen::VectorXd cubic_trend_raw(const std::array<double, 3>& coefficients, const std::array<double, 3>& means,
                                const std::array<double, 3>& sds, const Eigen::VectorXd& raw_grid);

/// Real roots of the derivative b1 + 2 b2 g + 3 b3 g^2, ascending.
std::vector<double> cubic_trend_turning_points(const std::array<double, 3>& coefficients);

}  // namespace mimic
