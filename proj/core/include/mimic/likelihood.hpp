#pragma once

#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mimic {

/// Sufficient statistics Y'Y, X'Y, X'X of a dataset. The fixed-x Gaussian
/// likelihood depends on the data only through these and N.
struct CrossProducts {
    Eigen::MatrixXd syy;  // p x p
    Eigen::MatrixXd sxy;  // k x p
    Eigen::MatrixXd sxx;  // k x k
    std::size_t n = 0;

    static CrossProducts from(const Dataset& data);
};

/// How the free parameters are laid out in a flat vector. Order: free
/// loadings (indicator order, fixed one skipped), beta, theta, sigma.
/// `natural` stores theta and sigma as-is; `unconstrained` stores their logs.
enum class Scale { natural, unconstrained };

Eigen::VectorXd pack(const ModelSpec& spec, const ParameterSet& params, Scale scale);
ParameterSet unpack(const ModelSpec& spec, const Eigen::VectorXd& free, Scale scale);
std::vector<std::string> parameter_names(const ModelSpec& spec);

/// W = (Y - X Pi)'(Y - X Pi).
Eigen::MatrixXd residual_cross_product(const Dataset& data, const ImpliedMoments& moments);

/// Sum over observations of the p-variate normal log-density of y_n with mean
/// Pi' x_n and covariance Omega. Throws SingularityError when Omega has
/// condition number above 1e12.
double log_likelihood(const Dataset& data, const ModelSpec& spec, const ParameterSet& params);
double log_likelihood(const CrossProducts& cp, const ModelSpec& spec, const ParameterSet& params);

/// Value and analytic gradient with respect to the packed free parameters.
struct LikelihoodValue {
    double loglik = 0.0;
    Eigen::VectorXd gradient;
    bool finite = false;
};

/// No validation of positivity; theta and sigma enter squared. Returns
/// finite = false instead of throwing when Omega is ill-conditioned.
LikelihoodValue evaluate_likelihood(const CrossProducts& cp, const ModelSpec& spec,
                                    const ParameterSet& params, Scale scale, bool with_gradient = true);

/// N x q matrix of per-observation scores on the natural scale. Rows sum to
/// the natural-scale gradient.
Eigen::MatrixXd observation_scores(const Dataset& data, const ModelSpec& spec, const ParameterSet& params);

}  // namespace mimic
