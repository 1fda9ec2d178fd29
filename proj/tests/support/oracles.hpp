// Test-only reference computations. Deliberately naive: explicit loops,
// cofactor expansion, no shared code with the library's numerics.
#pragma once

#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Eigen::MatrixXd& m);

/// Laplace expansion along the first row.
double determinant(const Mat& a);

/// adj(A) / det(A).
Mat adjugate_inverse(const Mat& a);

/// Omega = sigma^2 lambda lambda' + diag(theta^2), elementwise.
Mat implied_omega(const mimic::ParameterSet& p);

/// Sum over rows of log N(y_n; Pi' x_n, Omega), mean and quadratic form by loops.
double density_sum_loglik(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const mimic::ParameterSet& p);

/// W = sum_n e_n e_n' with e_n = y_n - lambda beta' x_n.
Mat residual_outer_sum(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x, const mimic::ParameterSet& p);

/// E[eta | y, x] from the joint normal of (eta, y) given x:
/// mu_eta + Cov(eta, y) Cov(y)^-1 (y - mu_y).
std::vector<double> joint_normal_scores(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x,
                                        const mimic::ParameterSet& p);

/// Closed-form MLE of the p = 2, k = 1 model, which is just-identified:
/// solved from the OLS reduced form. lambda[0] = 1.
mimic::ParameterSet just_identified_fit(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x);

struct Mardia {
    double b1 = 0.0;
    double b2 = 0.0;
};
/// Mardia's b1 and b2 by double loops over observations, ML covariance.
Mardia mardia_loops(const Eigen::MatrixXd& y);

/// Random small instance for oracle comparisons.
struct Instance {
    mimic::ModelSpec spec;
    mimic::ParameterSet params;
    mimic::Dataset data;
};
Instance random_instance(std::mt19937_64& rng, std::size_t p, std::size_t k, std::size_t n);

/// Y, X drawn from the model itself with the given parameters.
mimic::Dataset draw_from_model(std::mt19937_64& rng, const mimic::ParameterSet& p, std::size_t n);

}  // namespace oracle
