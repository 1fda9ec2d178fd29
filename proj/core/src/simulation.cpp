#include "mimic/simulation.hpp"

#include "mimic/errors.hpp"
#include "mimic/ingest.hpp"
#include "mimic/likelihood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <random>
#include <thread>

namespace mimic {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class ErrorSampler {
public:
    ErrorSampler(ErrorDistribution kind, double df) : kind_(kind), t_(df), t_scale_(std::sqrt((df - 2.0) / df)) {}

    template <class Rng>
    double operator()(Rng& rng) {
        if (kind_ == ErrorDistribution::normal) return normal_(rng);
        return t_scale_ * t_(rng);
    }

private:
    ErrorDistribution kind_;
    std::normal_distribution<double> normal_;
    std::student_t_distribution<double> t_;
    double t_scale_;
};

}  // namespace

void SimConfig::validate() const {
    spec.validate();
    true_params.validate(spec);
    if (n < spec.p() + spec.k() + 1) throw SchemaError("simulation sample size must be at least p + k + 1");
    if (errors == ErrorDistribution::scaled_t && !(t_df > 2.0)) throw SchemaError("scaled-t needs df > 2");
    if (causes == CauseDistribution::from_matrix &&
        (static_cast<std::size_t>(cause_matrix.rows()) != n || static_cast<std::size_t>(cause_matrix.cols()) != spec.k())) {
        throw SchemaError("cause matrix must be n x k");
    }
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication) noexcept {
    return splitmix64(splitmix64(seed) ^ replication);
}

SimulatedData simulate(const SimConfig& config, std::uint64_t replication) {
    // Zero theta is allowed here (noiseless generation), so validate the rest by hand.
    config.spec.validate();
    const auto p = static_cast<Eigen::Index>(config.spec.p());
    const auto k = static_cast<Eigen::Index>(config.spec.k());
    const auto n = static_cast<Eigen::Index>(config.n);
    const ParameterSet& tp = config.true_params;
    if (tp.lambda.size() != p || tp.beta.size() != k || tp.theta.size() != p) {
        throw SchemaError("true parameters do not match the model dimensions");
    }
    if ((tp.theta.array() < 0.0).any() || tp.sigma < 0.0) throw SchemaError("error SDs must be non-negative");
    if (config.n < config.spec.p() + config.spec.k() + 1) throw SchemaError("simulation sample size too small");
    if (config.errors == ErrorDistribution::scaled_t && !(config.t_df > 2.0)) throw SchemaError("scaled-t needs df > 2");

    std::mt19937_64 rng(replication_seed(config.seed, replication));
    std::normal_distribution<double> normal;
    ErrorSampler noise(config.errors, config.t_df);

    SimulatedData out;
    Dataset& d = out.data;
    if (config.causes == CauseDistribution::from_matrix) {
        if (config.cause_matrix.rows() != n || config.cause_matrix.cols() != k) throw SchemaError("cause matrix must be n x k");
        d.x = config.cause_matrix;
    } else {
        d.x.resize(n, k);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < k; ++c) d.x(r, c) = normal(rng);
    }
    out.latent = d.x * tp.beta;
    for (Eigen::Index r = 0; r < n; ++r) out.latent(r) += tp.sigma * noise(rng);
    d.y = out.latent * tp.lambda.transpose();
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < p; ++c) d.y(r, c) += tp.theta(c) * noise(rng);

    d.unit_labels.reserve(config.n);
    for (Eigen::Index r = 0; r < n; ++r) d.unit_labels.push_back("unit" + std::to_string(r + 1));
    d.period_label = "sim" + std::to_string(replication);
    if (config.standardize) {
        auto [y, ys] = standardize_columns(d.y);
        auto [x, xs] = standardize_columns(d.x);
        d.y = std::move(y);
        d.x = std::move(x);
        d.y_scaling = std::move(ys);
        d.x_scaling = std::move(xs);
    }
    return out;
}

double RecoveryReport::mean_coverage_error(SeMethod method, double level) const {
    if (parameters.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : parameters) {
        const double c = method == SeMethod::naive ? p.coverage_naive : method == SeMethod::mlm ? p.coverage_mlm : p.coverage_mlr;
        sum += std::abs(c - level);
    }
    return sum / static_cast<double>(parameters.size());
}

RecoveryReport recovery_study(const SimConfig& config, std::size_t replications, const FitConfig& fit_config,
                              unsigned threads) {
    config.validate();
    if (replications < 2) throw SchemaError("recovery study needs at least 2 replications");
    const ModelSpec& spec = config.spec;
    const Eigen::VectorXd truth = pack(spec, identify(spec, config.true_params), Scale::natural);
    const auto q = truth.size();

    struct Replicate {
        bool ok = false;
        std::string error;
        Eigen::VectorXd est, se_naive, se_mlm, se_mlr;
    };
    std::vector<Replicate> reps(replications);

    auto run_one = [&](std::size_t r) {
        Replicate& rep = reps[r];
        try {
            const SimulatedData sim = simulate(config, r);
            const FitResult fit = fit_ml(sim.data, spec, fit_config);
            if (!fit.converged) {
                rep.error = "replication " + std::to_string(r) + ": did not converge";
                return;
            }
            if (!fit.se_naive || !fit.se_mlm || !fit.se_mlr) {
                rep.error = "replication " + std::to_string(r) + ": standard errors unavailable";
                return;
            }
            rep.est = fit.estimates(spec);
            rep.se_naive = *fit.se_naive;
            rep.se_mlm = *fit.se_mlm;
            rep.se_mlr = *fit.se_mlr;
            rep.ok = true;
        } catch (const std::exception& e) {
            rep.error = "replication " + std::to_string(r) + ": " + e.what();
        }
    };

    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, replications));
    if (workers <= 1) {
        for (std::size_t r = 0; r < replications; ++r) run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < replications; r = next++) run_one(r);
            });
        }
    }

    RecoveryReport report;
    report.replications = replications;
    const auto names = parameter_names(spec);
    std::vector<ParameterRecovery> params(static_cast<std::size_t>(q));
    for (Eigen::Index j = 0; j < q; ++j) {
        params[static_cast<std::size_t>(j)].name = names[static_cast<std::size_t>(j)];
        params[static_cast<std::size_t>(j)].truth = truth(j);
    }
    for (const auto& rep : reps) {
        if (!rep.ok) {
            report.failures.push_back(rep.error);
            continue;
        }
        ++report.successful;
        for (Eigen::Index j = 0; j < q; ++j) {
            auto& pr = params[static_cast<std::size_t>(j)];
            pr.mean_estimate += rep.est(j);
            pr.mean_se_naive += rep.se_naive(j);
            pr.mean_se_mlm += rep.se_mlm(j);
            pr.mean_se_mlr += rep.se_mlr(j);
            auto covers = [&](double se) { return std::abs(rep.est(j) - truth(j)) <= 1.959963984540054 * se ? 1.0 : 0.0; };
            pr.coverage_naive += covers(rep.se_naive(j));
            pr.coverage_mlm += covers(rep.se_mlm(j));
            pr.coverage_mlr += covers(rep.se_mlr(j));
        }
    }
    const double m = static_cast<double>(report.successful);
    if (report.successful > 0) {
        for (Eigen::Index j = 0; j < q; ++j) {
            auto& pr = params[static_cast<std::size_t>(j)];
            pr.mean_estimate /= m;
            pr.mean_se_naive /= m;
            pr.mean_se_mlm /= m;
            pr.mean_se_mlr /= m;
            pr.coverage_naive /= m;
            pr.coverage_mlm /= m;
            pr.coverage_mlr /= m;
            pr.bias = pr.mean_estimate - pr.truth;
            double ss = 0.0;
            for (const auto& rep : reps) {
                if (rep.ok) ss += (rep.est(j) - pr.mean_estimate) * (rep.est(j) - pr.mean_estimate);
            }
            pr.empirical_sd = report.successful > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
        }
    }
    report.parameters = std::move(params);
    return report;
}

RawQueryTable simulate_raw_table(const RawTableSimConfig& config) {
    const std::size_t n = config.regions.empty() ? config.n_regions : config.regions.size();
    const auto k = static_cast<Eigen::Index>(config.causes.size());
    const ParameterSet& tp = config.true_params;
    if (tp.lambda.size() != 5 || tp.theta.size() != 5 || tp.beta.size() != k) {
        throw SchemaError("raw-table simulation needs 5 loadings/error SDs and one beta per cause");
    }
    if (n < 5 + static_cast<std::size_t>(k) + 1) throw SchemaError("too few regions for the model");

    std::mt19937_64 rng(replication_seed(config.seed, 0));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;

    RawQueryTable table;
    std::vector<RawRow> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        RawRow& r = base[i];
        if (config.regions.empty()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "region_%02zu", i + 1);
            r.region = buf;
        } else {
            r.region = config.regions[i];
        }
        r.causes[0] = std::round(20000.0 * std::exp(0.45 * normal(rng)));  // grp_pc, USD ppp
        r.causes[1] = 0.02 + 0.3 * unif(rng);                              // mining share
        r.causes[2] = 0.05 + 0.35 * unif(rng);                             // manufacturing share
        r.causes[3] = 10.0 * std::exp(0.4 * normal(rng));                  // emissions pc
        r.causes[4] = 30.0 * std::exp(1.0 * normal(rng));                  // pop density
        r.causes[5] = 0.08 + 0.1 * unif(rng);                              // age 65+
        r.causes[6] = 0.2 + 0.2 * unif(rng);                               // tertiary
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), k);
    for (Eigen::Index j = 0; j < k; ++j) x.col(j) = cause_column(base, config.causes[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXd xz = standardize_columns(x, config.causes).first;

    const std::array<double, 5> base_share{2.0e-4, 3.5e-4, 1.5e-4, 2.5e-4, 1.0e-4};
    for (const auto& period : config.periods) {
        for (std::size_t i = 0; i < n; ++i) {
            RawRow r = base[i];
            r.period = period;
            r.line = 0;
            const double eta = xz.row(static_cast<Eigen::Index>(i)).dot(tp.beta) + tp.sigma * normal(rng);
            const double total = std::round(config.total_queries * std::exp(0.5 * normal(rng)));
            for (std::size_t c = 0; c < 5; ++c) {
                const double z = tp.lambda(static_cast<Eigen::Index>(c)) * eta + tp.theta(static_cast<Eigen::Index>(c)) * normal(rng);
                r.counts[c] = std::round(total * base_share[c] * std::exp(config.share_scale * z));
            }
            r.total = total;
            table.rows.push_back(std::move(r));
        }
    }
    return table;
}

}  // namespace mimic
