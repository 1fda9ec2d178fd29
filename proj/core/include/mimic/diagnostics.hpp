#pragma once

#include "mimic/estimation.hpp"
#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mimic {

struct FitIndices {
    double aic = 0.0;
    double bic = 0.0;
    double cfi = 1.0;
    double rmsea = 0.0;
    double srmr = 0.0;
    double chisq_model = 0.0;
    double df_model = 0.0;
    double chisq_baseline = 0.0;
    double df_baseline = 0.0;
    double loglik_saturated = 0.0;
    double loglik_baseline = 0.0;
    std::size_t free_parameters = 0;
    std::vector<std::string> warnings;
};

/// Loglik of the unrestricted multivariate regression of Y on X with free
/// covariance, at its closed-form MLE.
double saturated_loglik(const Dataset& data);

/// Loglik of the independence baseline (Pi = 0, Omega diagonal) at its MLE.
double baseline_loglik(const Dataset& data);

/// AIC, BIC, chi-square against the saturated model, CFI against the
/// independence baseline, RMSEA with divisor N, and SRMR over the indicator
/// covariance (lower triangle with diagonal).
FitIndices fit_indices(const Dataset& data, const ModelSpec& spec, const FitResult& fit);

/// Indices from explicit ingredients; used by fit_indices.
FitIndices fit_indices_from(double loglik_model, std::size_t free_parameters, std::size_t n,
                            double loglik_saturated, double df_saturated, double loglik_baseline, double df_baseline);

/// SRMR between a sample and an implied covariance.
double srmr(const Eigen::MatrixXd& sample, const Eigen::MatrixXd& implied);

/// Model-implied covariance of the indicators: Pi' Sxx Pi / N + Omega.
Eigen::MatrixXd implied_indicator_covariance(const Dataset& data, const ImpliedMoments& moments);

struct MardiaResult {
    double skewness = 0.0;       // b_{1,p}
    double kurtosis = 0.0;       // b_{2,p}
    double skewness_stat = 0.0;  // N b1 / 6, chi-square with p(p+1)(p+2)/6 df
    double kurtosis_stat = 0.0;  // standardized b2, asymptotically N(0, 1)
    double skewness_df = 0.0;
    double skewness_pvalue = 1.0;
    double kurtosis_pvalue = 1.0;
    double omnibus_pvalue = 1.0;  // Bonferroni: min(1, 2 min(p_skew, p_kurt))
    bool rejected = false;        // omnibus_pvalue < alpha
};

MardiaResult mardia_test(const Eigen::MatrixXd& y, double alpha = 0.05);

}  // namespace mimic
