#include "mimic/likelihood.hpp"

#include "mimic/errors.hpp"

#include <cmath>
#include <numbers>

namespace mimic {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMinLogScale = -23.0;  // exp(-23) ~ 1e-10

struct OmegaFactor {
    Eigen::MatrixXd inverse;
    double log_det = 0.0;
    double condition = 0.0;
};

bool factor_omega(const Eigen::MatrixXd& omega, OmegaFactor& out) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
    if (eig.info() != Eigen::Success) return false;
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (!(lo > 0.0) || !std::isfinite(hi)) {
        out.condition = std::numeric_limits<double>::infinity();
        return false;
    }
    out.condition = hi / lo;
    if (out.condition > kMaxCondition) return false;
    out.log_det = ev.array().log().sum();
    out.inverse = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return true;
}

ImpliedMoments unchecked_moments(const ParameterSet& params) {
    ImpliedMoments m;
    m.pi = params.beta * params.lambda.transpose();
    m.omega = params.sigma * params.sigma * params.lambda * params.lambda.transpose();
    m.omega.diagonal() += params.theta.array().square().matrix();
    return m;
}

}  // namespace

CrossProducts CrossProducts::from(const Dataset& data) {
    CrossProducts cp;
    cp.syy = data.y.transpose() * data.y;
    cp.sxy = data.x.transpose() * data.y;
    cp.sxx = data.x.transpose() * data.x;
    cp.n = data.n();
    return cp;
}

Eigen::VectorXd pack(const ModelSpec& spec, const ParameterSet& params, Scale scale) {
    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto k = static_cast<Eigen::Index>(spec.k());
    const auto fixed = static_cast<Eigen::Index>(spec.fixed_loading);
    Eigen::VectorXd v(2 * p + k);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (i != fixed) v(at++) = params.lambda(i);
    }
    v.segment(at, k) = params.beta;
    at += k;
    for (Eigen::Index i = 0; i < p; ++i) {
        const double t = params.theta(i);
        v(at++) = scale == Scale::natural ? t : std::max(std::log(std::abs(t)), kMinLogScale);
    }
    v(at) = scale == Scale::natural ? params.sigma : std::max(std::log(std::abs(params.sigma)), kMinLogScale);
    return v;
}

ParameterSet unpack(const ModelSpec& spec, const Eigen::VectorXd& free, Scale scale) {
    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto k = static_cast<Eigen::Index>(spec.k());
    const auto fixed = static_cast<Eigen::Index>(spec.fixed_loading);
    if (free.size() != 2 * p + k) throw SchemaError("free parameter vector has wrong length");
    ParameterSet params;
    params.lambda.resize(p);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < p; ++i) params.lambda(i) = (i == fixed) ? 1.0 : free(at++);
    params.beta = free.segment(at, k);
    at += k;
    params.theta = free.segment(at, p);
    at += p;
    params.sigma = free(at);
    if (scale == Scale::unconstrained) {
        params.theta = params.theta.array().exp().matrix();
        params.sigma = std::exp(params.sigma);
    }
    return params;
}

std::vector<std::string> parameter_names(const ModelSpec& spec) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.p(); ++i) {
        if (i != spec.fixed_loading) names.push_back("lambda[" + spec.indicator_names[i] + "]");
    }
    for (const auto& c : spec.cause_names) names.push_back("beta[" + c + "]");
    for (const auto& y : spec.indicator_names) names.push_back("theta[" + y + "]");
    names.emplace_back("sigma");
    return names;
}

Eigen::MatrixXd residual_cross_product(const Dataset& data, const ImpliedMoments& moments) {
    if (data.x.cols() != moments.pi.rows() || data.y.cols() != moments.pi.cols() || data.x.rows() != data.y.rows()) {
        throw SchemaError("dataset and reduced-form dimensions disagree");
    }
    const Eigen::MatrixXd resid = data.y - data.x * moments.pi;
    return resid.transpose() * resid;
}

LikelihoodValue evaluate_likelihood(const CrossProducts& cp, const ModelSpec& spec, const ParameterSet& params,
                                    Scale scale, bool with_gradient) {
    LikelihoodValue out;
    const ImpliedMoments m = unchecked_moments(params);
    OmegaFactor f;
    if (!factor_omega(m.omega, f)) return out;

    const double n = static_cast<double>(cp.n);
    const double p = static_cast<double>(spec.p());
    // W = Syy - Pi' Sxy - Sxy' Pi + Pi' Sxx Pi
    const Eigen::MatrixXd sxx_pi = cp.sxx * m.pi;
    const Eigen::MatrixXd w = cp.syy - m.pi.transpose() * cp.sxy - cp.sxy.transpose() * m.pi + m.pi.transpose() * sxx_pi;
    out.loglik = -0.5 * n * f.log_det - 0.5 * (f.inverse.cwiseProduct(w)).sum() -
                 0.5 * p * n * std::log(2.0 * std::numbers::pi);
    out.finite = std::isfinite(out.loglik);
    if (!with_gradient || !out.finite) return out;

    // dL = -1/2 tr(G dOmega) + tr(M' dPi), G = N Omega^-1 - Omega^-1 W Omega^-1,
    // M = (Sxy - Sxx Pi) Omega^-1.
    const Eigen::MatrixXd g = n * f.inverse - f.inverse * w * f.inverse;
    const Eigen::MatrixXd mm = (cp.sxy - sxx_pi) * f.inverse;
    const Eigen::VectorXd g_lambda = g * params.lambda;
    const double s2 = params.sigma * params.sigma;

    const Eigen::VectorXd d_lambda = mm.transpose() * params.beta - s2 * g_lambda;
    const Eigen::VectorXd d_beta = mm * params.lambda;

    const auto pi_ = static_cast<Eigen::Index>(spec.p());
    const auto ki = static_cast<Eigen::Index>(spec.k());
    const auto fixed = static_cast<Eigen::Index>(spec.fixed_loading);
    out.gradient.resize(2 * pi_ + ki);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < pi_; ++i) {
        if (i != fixed) out.gradient(at++) = d_lambda(i);
    }
    out.gradient.segment(at, ki) = d_beta;
    at += ki;
    for (Eigen::Index i = 0; i < pi_; ++i) {
        const double t = params.theta(i);
        const double d_theta = -t * g(i, i);
        out.gradient(at++) = scale == Scale::natural ? d_theta : d_theta * t;
    }
    const double d_sigma = -params.sigma * params.lambda.dot(g_lambda);
    out.gradient(at) = scale == Scale::natural ? d_sigma : d_sigma * params.sigma;
    return out;
}

double log_likelihood(const CrossProducts& cp, const ModelSpec& spec, const ParameterSet& params) {
    params.validate(spec);
    const LikelihoodValue v = evaluate_likelihood(cp, spec, params, Scale::natural, false);
    if (!v.finite) throw SingularityError("implied covariance is numerically singular (condition number > 1e12)");
    return v.loglik;
}

double log_likelihood(const Dataset& data, const ModelSpec& spec, const ParameterSet& params) {
    data.validate_shape(spec);
    return log_likelihood(CrossProducts::from(data), spec, params);
}

Eigen::MatrixXd observation_scores(const Dataset& data, const ModelSpec& spec, const ParameterSet& params) {
    const ImpliedMoments m = unchecked_moments(params);
    OmegaFactor f;
    if (!factor_omega(m.omega, f)) throw SingularityError("implied covariance is numerically singular");

    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto k = static_cast<Eigen::Index>(spec.k());
    const auto fixed = static_cast<Eigen::Index>(spec.fixed_loading);
    const auto n = data.y.rows();
    const double s2 = params.sigma * params.sigma;
    const Eigen::VectorXd omega_inv_lambda = f.inverse * params.lambda;
    const double lambda_omega_inv_lambda = params.lambda.dot(omega_inv_lambda);

    const Eigen::MatrixXd resid = data.y - data.x * m.pi;
    const Eigen::MatrixXd u_all = resid * f.inverse;  // row n is u_n' = e_n' Omega^-1

    Eigen::MatrixXd scores(n, 2 * p + k);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::VectorXd u = u_all.row(r).transpose();
        const double u_lambda = u.dot(params.lambda);
        const double x_beta = data.x.row(r).dot(params.beta);
        // G_n = Omega^-1 - u u'
        const Eigen::VectorXd g_lambda = omega_inv_lambda - u * u_lambda;
        const Eigen::VectorXd d_lambda = u * x_beta - s2 * g_lambda;

        Eigen::Index at = 0;
        for (Eigen::Index i = 0; i < p; ++i) {
            if (i != fixed) scores(r, at++) = d_lambda(i);
        }
        scores.row(r).segment(at, k) = data.x.row(r) * u_lambda;
        at += k;
        for (Eigen::Index i = 0; i < p; ++i) {
            scores(r, at++) = -params.theta(i) * (f.inverse(i, i) - u(i) * u(i));
        }
        scores(r, at) = -params.sigma * (lambda_omega_inv_lambda - u_lambda * u_lambda);
    }
    return scores;
}

}  // namespace mimic
