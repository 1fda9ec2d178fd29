#include "mimic/diagnostics.hpp"

#include "mimic/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mimic {

namespace {

double gaussian_loglik_at_mle(double n, double p, double log_det) {
    return -0.5 * n * log_det - 0.5 * n * p - 0.5 * n * p * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double saturated_loglik(const Dataset& data) {
    const double n = static_cast<double>(data.n());
    const Eigen::MatrixXd coef = data.x.colPivHouseholderQr().solve(data.y);
    const Eigen::MatrixXd resid = data.y - data.x * coef;
    const Eigen::MatrixXd omega = resid.transpose() * resid / n;
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) throw SingularityError("saturated residual covariance is singular");
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return gaussian_loglik_at_mle(n, static_cast<double>(data.y.cols()), log_det);
}

double baseline_loglik(const Dataset& data) {
    const double n = static_cast<double>(data.n());
    const Eigen::VectorXd var = data.y.colwise().squaredNorm().transpose() / n;
    if ((var.array() <= 0.0).any()) throw SingularityError("indicator with zero second moment");
    return gaussian_loglik_at_mle(n, static_cast<double>(data.y.cols()), var.array().log().sum());
}

FitIndices fit_indices_from(double loglik_model, std::size_t free_parameters, std::size_t n, double loglik_saturated,
                            double df_saturated, double loglik_baseline, double df_baseline) {
    FitIndices fi;
    const double q = static_cast<double>(free_parameters);
    const double nn = static_cast<double>(n);
    fi.free_parameters = free_parameters;
    fi.loglik_saturated = loglik_saturated;
    fi.loglik_baseline = loglik_baseline;
    fi.aic = 2.0 * q - 2.0 * loglik_model;
    fi.bic = q * std::log(nn) - 2.0 * loglik_model;
    fi.df_model = std::max(0.0, df_saturated - q);
    fi.df_baseline = df_baseline;

    fi.chisq_model = 2.0 * (loglik_saturated - loglik_model);
    if (fi.chisq_model < 0.0) {
        if (fi.chisq_model < -1e-6) fi.warnings.emplace_back("negative model chi-square clamped to 0");
        fi.chisq_model = 0.0;
    }
    fi.chisq_baseline = std::max(0.0, 2.0 * (loglik_saturated - loglik_baseline));

    const double excess_model = std::max(fi.chisq_model - fi.df_model, 0.0);
    const double excess_base = std::max({fi.chisq_baseline - fi.df_baseline, excess_model, 0.0});
    fi.cfi = excess_base > 0.0 ? 1.0 - excess_model / excess_base : 1.0;
    fi.cfi = std::clamp(fi.cfi, 0.0, 1.0);
    fi.rmsea = fi.df_model > 0.0 ? std::sqrt(excess_model / (fi.df_model * nn)) : 0.0;
    return fi;
}

Eigen::MatrixXd implied_indicator_covariance(const Dataset& data, const ImpliedMoments& moments) {
    const double n = static_cast<double>(data.n());
    return moments.pi.transpose() * (data.x.transpose() * data.x / n) * moments.pi + moments.omega;
}

double srmr(const Eigen::MatrixXd& sample, const Eigen::MatrixXd& implied) {
    const auto p = sample.rows();
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = j; i < p; ++i) {
            const double scale = std::sqrt(sample(i, i) * sample(j, j));
            const double r = (sample(i, j) - implied(i, j)) / scale;
            sum += r * r;
            ++count;
        }
    }
    return std::sqrt(sum / static_cast<double>(count));
}

FitIndices fit_indices(const Dataset& data, const ModelSpec& spec, const FitResult& fit) {
    data.validate(spec);
    const std::size_t p = spec.p();
    const std::size_t k = spec.k();
    const double dsat = static_cast<double>(k * p + p * (p + 1) / 2);
    FitIndices fi = fit_indices_from(fit.loglik, spec.free_parameter_count(), data.n(), saturated_loglik(data), dsat,
                                     baseline_loglik(data), dsat - static_cast<double>(p));
    if (!fit.converged) fi.warnings.emplace_back("fit did not converge; indices are provisional");
    const double n = static_cast<double>(data.n());
    const Eigen::MatrixXd sample = data.y.transpose() * data.y / n;
    fi.srmr = srmr(sample, implied_indicator_covariance(data, implied_moments(spec, fit.params)));
    return fi;
}

MardiaResult mardia_test(const Eigen::MatrixXd& y, double alpha) {
    const auto n = y.rows();
    const auto p = y.cols();
    if (n <= p) throw SchemaError("Mardia's test needs more observations than variables");
    const double nn = static_cast<double>(n);
    const double pp = static_cast<double>(p);

    const Eigen::RowVectorXd mean = y.colwise().mean();
    const Eigen::MatrixXd centered = y.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / nn;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw SingularityError("sample covariance is singular");
    // Rows of `white` are L^-1 d_n, so G = white * white' holds d_i' S^-1 d_j.
    const Eigen::MatrixXd white = llt.matrixL().solve(centered.transpose()).transpose();
    const Eigen::MatrixXd g = white * white.transpose();

    MardiaResult r;
    r.skewness = g.array().cube().sum() / (nn * nn);
    r.kurtosis = g.diagonal().array().square().sum() / nn;
    r.skewness_stat = nn * r.skewness / 6.0;
    r.skewness_df = pp * (pp + 1.0) * (pp + 2.0) / 6.0;
    r.kurtosis_stat = (r.kurtosis - pp * (pp + 2.0)) / std::sqrt(8.0 * pp * (pp + 2.0) / nn);

    const boost::math::chi_squared chi(r.skewness_df);
    r.skewness_pvalue = std::clamp(boost::math::cdf(boost::math::complement(chi, std::max(0.0, r.skewness_stat))), 0.0, 1.0);
    r.kurtosis_pvalue = std::clamp(two_sided_p_value(r.kurtosis_stat), 0.0, 1.0);
    r.omnibus_pvalue = std::min(1.0, 2.0 * std::min(r.skewness_pvalue, r.kurtosis_pvalue));
    r.rejected = r.omnibus_pvalue < alpha;
    return r;
}

}  // namespace mimic
