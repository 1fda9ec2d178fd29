#pragma once

#include "mimic/estimation.hpp"
#include "mimic/ingest.hpp"
#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace mimic {

enum class CauseDistribution { standard_normal, from_matrix };
enum class ErrorDistribution { normal, scaled_t };

struct SimConfig {
    ModelSpec spec;
    ParameterSet true_params;
    std::size_t n = 0;
    CauseDistribution causes = CauseDistribution::standard_normal;
    Eigen::MatrixXd cause_matrix;  // used with from_matrix; must have n rows
    ErrorDistribution errors = ErrorDistribution::normal;
    double t_df = 5.0;  // scaled-t degrees of freedom, rescaled to unit variance
    std::uint64_t seed = 1;
    bool standardize = false;  // z-score Y and X after generation

    void validate() const;
};

struct SimulatedData {
    Dataset data;
    Eigen::VectorXd latent;  // true eta
};

/// Generates X, eta = X beta + zeta, Y = eta lambda' + eps. The same
/// (config, replication) pair always yields bit-identical output.
SimulatedData simulate(const SimConfig& config, std::uint64_t replication = 0);

/// Counter-based seed for replication r of a study seeded with `seed`.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication) noexcept;

struct ParameterRecovery {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double empirical_sd = 0.0;
    double mean_se_naive = 0.0;
    double mean_se_mlm = 0.0;
    double mean_se_mlr = 0.0;
    double coverage_naive = 0.0;  // share of 95% Wald intervals covering truth
    double coverage_mlm = 0.0;
    double coverage_mlr = 0.0;
};

struct RecoveryReport {
    std::size_t replications = 0;
    std::size_t successful = 0;
    std::vector<std::string> failures;  // one entry per failed replication
    std::vector<ParameterRecovery> parameters;

    /// Mean over parameters of |coverage - level|.
    [[nodiscard]] double mean_coverage_error(SeMethod method, double level = 0.95) const;
};

/// Monte Carlo study: simulate, fit, aggregate. Replications run on up to
/// `threads` workers (0 = hardware concurrency); results are independent of
/// the thread count.
RecoveryReport recovery_study(const SimConfig& config, std::size_t replications, const FitConfig& fit_config = {},
                              unsigned threads = 0);

/// Synthetic query-count table in the input schema, for demos and
/// end-to-end tests. Raw causes are drawn once per region and reused across
/// periods; shares follow share_i = base_i * exp(scale * (lambda_i eta + theta_i eps_i)).
struct RawTableSimConfig {
    std::vector<std::string> regions;  // empty: region_01, region_02, ...
    std::size_t n_regions = 81;
    std::vector<std::string> periods{"2014", "2015"};
    std::vector<std::string> causes;  // cause names entering eta (standardized)
    ParameterSet true_params;         // p = 5, k = causes.size()
    double share_scale = 0.2;
    double total_queries = 2.0e6;
    std::uint64_t seed = 1;
};

RawQueryTable simulate_raw_table(const RawTableSimConfig& config);

}  // namespace mimic
