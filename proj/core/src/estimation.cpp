#include "mimic/estimation.hpp"

#include "mimic/errors.hpp"
#include "optimizer.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace mimic {

std::string_view to_string(SeMethod method) noexcept {
    switch (method) {
        case SeMethod::naive: return "naive";
        case SeMethod::mlm: return "mlm";
        case SeMethod::mlr: return "mlr";
    }
    return "?";
}

SeMethod parse_se_method(std::string_view text) {
    if (text == "naive") return SeMethod::naive;
    if (text == "mlm") return SeMethod::mlm;
    if (text == "mlr") return SeMethod::mlr;
    throw SchemaError("unknown standard-error method '" + std::string(text) + "'");
}

std::string_view to_string(Stars stars) noexcept {
    switch (stars) {
        case Stars::none: return "";
        case Stars::one: return "*";
        case Stars::two: return "**";
        case Stars::three: return "***";
    }
    return "";
}

namespace {

Eigen::MatrixXd ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.colPivHouseholderQr().solve(y);
}

/// Inverse of a symmetric positive definite matrix; nullopt when it is not.
std::optional<Eigen::MatrixXd> spd_inverse(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    if (eig.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-10 * std::max(1.0, ev.maxCoeff()))) return std::nullopt;
    return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXd sqrt_diag(const Eigen::MatrixXd& cov) { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

bool wants(const FitConfig& config, SeMethod m) {
    return std::find(config.se_methods.begin(), config.se_methods.end(), m) != config.se_methods.end();
}

// vech index (i >= j), column-major over the lower triangle.
std::size_t vech_index(std::size_t i, std::size_t j, std::size_t p) {
    if (i < j) std::swap(i, j);
    return j * p - j * (j - 1) / 2 + (i - j);
}

/// Per-observation normal-theory information of (vec Pi, vech Omega) with
/// Pi k x p stored column-major.
Eigen::MatrixXd saturated_information(const Eigen::MatrixXd& sxx_mean, const Eigen::MatrixXd& omega_inv) {
    const auto k = static_cast<std::size_t>(sxx_mean.rows());
    const auto p = static_cast<std::size_t>(omega_inv.rows());
    const std::size_t npi = k * p;
    const std::size_t nom = p * (p + 1) / 2;
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(npi + nom), static_cast<Eigen::Index>(npi + nom));
    for (std::size_t b = 0; b < p; ++b)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t d = 0; d < p; ++d)
                for (std::size_t c = 0; c < k; ++c)
                    info(static_cast<Eigen::Index>(b * k + a), static_cast<Eigen::Index>(d * k + c)) =
                        sxx_mean(a, c) * omega_inv(b, d);

    // 1/2 tr(A D_ij A D_kl) with D_ij = dOmega / d omega_ij.
    auto pairs = [](std::size_t i, std::size_t j) {
        std::vector<std::pair<std::size_t, std::size_t>> out{{i, j}};
        if (i != j) out.emplace_back(j, i);
        return out;
    };
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = j; i < p; ++i)
            for (std::size_t l = 0; l < p; ++l)
                for (std::size_t kk = l; kk < p; ++kk) {
                    double s = 0.0;
                    for (auto [r1, c1] : pairs(i, j))
                        for (auto [r2, c2] : pairs(kk, l)) s += omega_inv(c2, r1) * omega_inv(c1, r2);
                    info(static_cast<Eigen::Index>(npi + vech_index(i, j, p)),
                         static_cast<Eigen::Index>(npi + vech_index(kk, l, p))) = 0.5 * s;
                }
    return info;
}

/// Derivative of (vec Pi, vech Omega) with respect to the free natural parameters.
Eigen::MatrixXd moment_jacobian(const ModelSpec& spec, const ParameterSet& params) {
    const std::size_t p = spec.p();
    const std::size_t k = spec.k();
    const std::size_t npi = k * p;
    const std::size_t rows = npi + p * (p + 1) / 2;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                                static_cast<Eigen::Index>(spec.free_parameter_count()));
    const double s2 = params.sigma * params.sigma;
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < p; ++j) {
        if (j == spec.fixed_loading) continue;
        // dPi = beta e_j'
        for (std::size_t a = 0; a < k; ++a) jac(static_cast<Eigen::Index>(j * k + a), col) = params.beta(static_cast<Eigen::Index>(a));
        // dOmega = sigma^2 (e_j lambda' + lambda e_j')
        for (std::size_t i = 0; i < p; ++i) {
            const double v = s2 * params.lambda(static_cast<Eigen::Index>(i)) * (i == j ? 2.0 : 1.0);
            jac(static_cast<Eigen::Index>(npi + vech_index(i, j, p)), col) = v;
        }
        ++col;
    }
    for (std::size_t a = 0; a < k; ++a, ++col) {
        for (std::size_t b = 0; b < p; ++b) jac(static_cast<Eigen::Index>(b * k + a), col) = params.lambda(static_cast<Eigen::Index>(b));
    }
    for (std::size_t i = 0; i < p; ++i, ++col) {
        jac(static_cast<Eigen::Index>(npi + vech_index(i, i, p)), col) = 2.0 * params.theta(static_cast<Eigen::Index>(i));
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = j; i < p; ++i)
            jac(static_cast<Eigen::Index>(npi + vech_index(i, j, p)), col) =
                2.0 * params.sigma * params.lambda(static_cast<Eigen::Index>(i)) * params.lambda(static_cast<Eigen::Index>(j));
    return jac;
}

struct SeBundle {
    std::optional<Eigen::MatrixXd> cov_naive;
    std::optional<Eigen::MatrixXd> cov_mlr;
    std::optional<double> mlm_scaling;
    std::vector<std::string> warnings;
    bool singular = false;
};

SeBundle compute_standard_errors(const Dataset& data, const ModelSpec& spec, const ParameterSet& params,
                                 const std::vector<SeMethod>& methods) {
    SeBundle out;
    const Eigen::MatrixXd info = observed_information(data, spec, params);
    const auto inv = info.allFinite() ? spd_inverse(info) : std::nullopt;
    if (!inv) {
        out.singular = true;
        out.warnings.emplace_back("observed information is singular or indefinite; standard errors unavailable");
        return out;
    }
    out.cov_naive = *inv;
    auto has = [&](SeMethod m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
    if (has(SeMethod::mlr)) {
        const Eigen::MatrixXd scores = observation_scores(data, spec, params);
        const Eigen::MatrixXd meat = scores.transpose() * scores;
        out.cov_mlr = (*inv) * meat * (*inv);
    }
    if (has(SeMethod::mlm)) {
        try {
            out.mlm_scaling = satorra_bentler(data, spec, params).scaling;
        } catch (const std::exception& e) {
            out.warnings.emplace_back(std::string("MLM correction unavailable: ") + e.what());
        }
    }
    return out;
}

}  // namespace

ParameterSet initial_parameters(const Dataset& data, const ModelSpec& spec) {
    const auto fixed = static_cast<Eigen::Index>(spec.fixed_loading);
    const Eigen::MatrixXd coef = ols(data.x, data.y);
    const Eigen::MatrixXd resid = data.y - data.x * coef;
    const double n = static_cast<double>(data.n());

    ParameterSet start;
    start.lambda = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.p()));
    start.beta = coef.col(fixed);
    start.theta = (resid.colwise().squaredNorm().transpose() / n).cwiseSqrt();
    for (Eigen::Index i = 0; i < start.theta.size(); ++i) {
        if (!(start.theta(i) > 1e-3)) start.theta(i) = 1e-3;
    }
    start.sigma = 0.5;
    return start;
}

Eigen::MatrixXd observed_information(const Dataset& data, const ModelSpec& spec, const ParameterSet& params) {
    const CrossProducts cp = CrossProducts::from(data);
    const detail::Objective grad = [&](const Eigen::VectorXd& v, double& value, Eigen::VectorXd& g) {
        const LikelihoodValue lv = evaluate_likelihood(cp, spec, unpack(spec, v, Scale::natural), Scale::natural);
        value = lv.loglik;
        g = lv.gradient;
        return lv.finite;
    };
    return -detail::finite_difference_hessian(grad, pack(spec, params, Scale::natural));
}

SatorraBentler satorra_bentler(const Dataset& data, const ModelSpec& spec, const ParameterSet& params) {
    const std::size_t q = spec.free_parameter_count();
    if (data.n() < q + 2) {
        throw SchemaError("N = " + std::to_string(data.n()) + " is too small for fourth-moment estimation (need >= " +
                          std::to_string(q + 2) + ")");
    }
    const std::size_t p = spec.p();
    const std::size_t k = spec.k();
    const std::size_t dsat = k * p + p * (p + 1) / 2;
    SatorraBentler out;
    out.df = dsat > q ? dsat - q : 0;
    if (out.df == 0) return out;

    const double n = static_cast<double>(data.n());
    const Eigen::MatrixXd sxx_mean = data.x.transpose() * data.x / n;

    // Saturated estimates and per-observation scores.
    const Eigen::MatrixXd pi_sat = ols(data.x, data.y);
    const Eigen::MatrixXd resid = data.y - data.x * pi_sat;
    const Eigen::MatrixXd omega_sat = resid.transpose() * resid / n;
    const auto omega_sat_inv = spd_inverse(omega_sat);
    if (!omega_sat_inv) throw SingularityError("saturated residual covariance is singular");
    const Eigen::MatrixXd u_all = resid * (*omega_sat_inv);

    const std::size_t npi = k * p;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dsat), static_cast<Eigen::Index>(dsat));
    Eigen::VectorXd s(static_cast<Eigen::Index>(dsat));
    for (Eigen::Index r = 0; r < data.y.rows(); ++r) {
        const Eigen::VectorXd u = u_all.row(r).transpose();
        for (std::size_t b = 0; b < p; ++b)
            for (std::size_t a = 0; a < k; ++a)
                s(static_cast<Eigen::Index>(b * k + a)) = data.x(r, static_cast<Eigen::Index>(a)) * u(static_cast<Eigen::Index>(b));
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t i = j; i < p; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto jj = static_cast<Eigen::Index>(j);
                const double v = u(ii) * u(jj) - (*omega_sat_inv)(ii, jj);
                s(static_cast<Eigen::Index>(npi + vech_index(i, j, p))) = i == j ? 0.5 * v : v;
            }
        meat.noalias() += s * s.transpose();
    }
    meat /= n;
    const auto sat_info_inv = spd_inverse(saturated_information(sxx_mean, *omega_sat_inv));
    if (!sat_info_inv) throw SingularityError("saturated information is singular");
    const Eigen::MatrixXd gamma = (*sat_info_inv) * meat * (*sat_info_inv);

    const ImpliedMoments implied = implied_moments(spec, params);
    const auto omega_inv = spd_inverse(implied.omega);
    if (!omega_inv) throw SingularityError("implied covariance is singular");
    const Eigen::MatrixXd weight = saturated_information(sxx_mean, *omega_inv);
    const Eigen::MatrixXd delta = moment_jacobian(spec, params);
    const Eigen::MatrixXd wd = weight * delta;
    const auto inner = spd_inverse(delta.transpose() * wd);
    if (!inner) throw SingularityError("model moment Jacobian is rank deficient");
    const Eigen::MatrixXd u_mat = weight - wd * (*inner) * wd.transpose();
    out.trace = (u_mat * gamma).trace();
    out.scaling = out.trace / static_cast<double>(out.df);
    return out;
}

FitResult fit_ml(const Dataset& data, const ModelSpec& spec, const FitConfig& config) {
    spec.validate();
    if (spec.p() < 2) throw SchemaError("fitting needs at least 2 indicators; with one the error variances are not identified");
    data.validate(spec);
    const CrossProducts cp = CrossProducts::from(data);

    const ParameterSet start = config.start ? identify(spec, *config.start) : initial_parameters(data, spec);
    const detail::Objective objective = [&](const Eigen::VectorXd& z, double& value, Eigen::VectorXd& g) {
        const LikelihoodValue lv = evaluate_likelihood(cp, spec, unpack(spec, z, Scale::unconstrained), Scale::unconstrained);
        if (!lv.finite) return false;
        value = -lv.loglik;
        g = -lv.gradient;
        return true;
    };

    FitResult fit;
    fit.names = parameter_names(spec);
    const Eigen::VectorXd z0 = pack(spec, start, Scale::unconstrained);
    {
        double v = 0.0;
        Eigen::VectorXd g;
        if (!objective(z0, v, g)) throw SingularityError("implied covariance is singular at the starting point");
        fit.loglik_start = -v;
    }

    detail::OptimOptions opts;
    opts.gradient_tolerance = config.gradient_tolerance;
    opts.relative_tolerance = config.relative_tolerance;
    opts.max_iterations = config.max_iterations;
    const detail::OptimResult opt = detail::minimize(objective, z0, opts);

    fit.params = unpack(spec, opt.x, Scale::unconstrained);
    fit.loglik = -opt.value;
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.gradient_norm = opt.gradient.size() ? opt.gradient.cwiseAbs().maxCoeff() : 0.0;
    if (!fit.converged) fit.warnings.emplace_back("optimizer did not reach the gradient tolerance");

    try {
        fit.params_standardized = standardize_loadings(fit.params);
    } catch (const SingularityError&) {
        fit.params_standardized = fit.params;
        fit.warnings.emplace_back("loadings sum to zero; standardized loadings unavailable");
    }

    if (fit.params.theta.minCoeff() < config.heywood_threshold) {
        fit.heywood = true;
        fit.warnings.emplace_back("an indicator error SD fell below the Heywood threshold");
    }

    if (!config.se_methods.empty()) {
        SeBundle se = compute_standard_errors(data, spec, fit.params, config.se_methods);
        fit.information_singular = se.singular;
        for (auto& w : se.warnings) fit.warnings.push_back(std::move(w));
        if (se.cov_naive) {
            if (wants(config, SeMethod::naive)) fit.se_naive = sqrt_diag(*se.cov_naive);
            fit.cov_naive = se.cov_naive;
        }
        if (se.cov_mlr) {
            fit.se_mlr = sqrt_diag(*se.cov_mlr);
            fit.cov_mlr = se.cov_mlr;
        }
        if (se.mlm_scaling && se.cov_naive) {
            fit.mlm_scaling = *se.mlm_scaling;
            fit.se_mlm = sqrt_diag(*se.cov_naive) * std::sqrt(std::max(0.0, fit.mlm_scaling));
        }
    }

    const Eigen::VectorXd est = fit.estimates(spec);
    fit.significance.assign(static_cast<std::size_t>(est.size()), Stars::none);
    for (Eigen::Index i = 0; i < est.size(); ++i) {
        std::vector<double> ses;
        if (fit.se_mlm) ses.push_back((*fit.se_mlm)(i));
        if (fit.se_mlr) ses.push_back((*fit.se_mlr)(i));
        if (ses.empty() && fit.se_naive) ses.push_back((*fit.se_naive)(i));
        fit.significance[static_cast<std::size_t>(i)] = significance_stars(est(i), ses);
    }
    return fit;
}

Eigen::VectorXd robust_se(const Dataset& data, const ModelSpec& spec, const FitResult& fit, SeMethod method) {
    const Eigen::MatrixXd info = observed_information(data, spec, fit.params);
    const auto inv = info.allFinite() ? spd_inverse(info) : std::nullopt;
    if (!inv) throw SingularityError("observed information is singular or indefinite");
    switch (method) {
        case SeMethod::naive: return sqrt_diag(*inv);
        case SeMethod::mlr: {
            const Eigen::MatrixXd scores = observation_scores(data, spec, fit.params);
            return sqrt_diag((*inv) * (scores.transpose() * scores) * (*inv));
        }
        case SeMethod::mlm: {
            const double c = satorra_bentler(data, spec, fit.params).scaling;
            return sqrt_diag(*inv) * std::sqrt(std::max(0.0, c));
        }
    }
    return {};
}

double two_sided_p_value(double z) {
    if (!std::isfinite(z)) return 0.0;
    static const boost::math::normal standard;
    return 2.0 * boost::math::cdf(boost::math::complement(standard, std::abs(z)));
}

Stars significance_stars(double estimate, std::span<const double> standard_errors) {
    double se = 0.0;
    for (double s : standard_errors) {
        if (std::isfinite(s) && s > 0.0) se = std::max(se, s);
    }
    if (se <= 0.0 || estimate == 0.0) return Stars::none;
    const double pv = two_sided_p_value(estimate / se);
    if (pv < 0.01) return Stars::three;
    if (pv < 0.05) return Stars::two;
    if (pv < 0.10) return Stars::one;
    return Stars::none;
}

Eigen::MatrixXd standardized_jacobian(const ModelSpec& spec, const ParameterSet& params) {
    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto k = static_cast<Eigen::Index>(spec.k());
    const auto fixed = static_cast<Eigen::Index>(spec.fixed_loading);
    const double total = params.lambda.sum();
    const double sign = total < 0.0 ? -1.0 : 1.0;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * p + k + 1, 2 * p + k);

    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (j == fixed) continue;
        for (Eigen::Index i = 0; i < p; ++i) {
            jac(i, col) = (i == j ? 1.0 / total : 0.0) - params.lambda(i) / (total * total);
        }
        for (Eigen::Index a = 0; a < k; ++a) jac(p + a, col) = params.beta(a);
        jac(2 * p + k, col) = params.sigma * sign;
        ++col;
    }
    for (Eigen::Index a = 0; a < k; ++a, ++col) jac(p + a, col) = total;
    for (Eigen::Index i = 0; i < p; ++i, ++col) jac(p + k + i, col) = 1.0;
    jac(2 * p + k, col) = std::abs(total);
    return jac;
}

}  // namespace mimic
