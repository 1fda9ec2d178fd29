#include <catch_amalgamated.hpp>

#include "mimic/config.hpp"
#include "mimic/errors.hpp"
#include "mimic/simulation.hpp"

#include <cmath>

using namespace mimic;
using Catch::Matchers::WithinAbs;

namespace {

SimConfig base_config(std::size_t n) {
    SimConfig c;
    c.spec = ModelSpec::make(5, 6);
    c.true_params = default_true_parameters(5, 6);
    c.n = n;
    c.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("default population parameters have unit indicator variance") {
    const ParameterSet t = default_true_parameters(5, 6);
    const double var_eta = t.beta.squaredNorm() + t.sigma * t.sigma;
    for (Eigen::Index i = 0; i < 5; ++i) {
        CHECK_THAT(t.lambda(i) * t.lambda(i) * var_eta + t.theta(i) * t.theta(i), WithinAbs(1.0, 1e-12));
    }
    CHECK(t.lambda(0) == 1.0);
}

TEST_CASE("simulated moments approach the implied moments") {
    const SimConfig c = base_config(200000);
    const SimulatedData s = simulate(c);
    const Eigen::MatrixXd cov_y = s.data.y.transpose() * s.data.y / static_cast<double>(c.n);
    const ImpliedMoments m = implied_moments(c.spec, c.true_params);
    const Eigen::MatrixXd implied = m.pi.transpose() * m.pi + m.omega;  // Sxx/N -> I
    CHECK((cov_y - implied).cwiseAbs().maxCoeff() < 0.02);
    const Eigen::VectorXd resid = s.latent - s.data.x * c.true_params.beta;
    CHECK_THAT(std::sqrt(resid.squaredNorm() / static_cast<double>(c.n)), WithinAbs(c.true_params.sigma, 0.01));
}

TEST_CASE("scaled-t errors keep unit variance but add kurtosis") {
    SimConfig c = base_config(200000);
    c.errors = ErrorDistribution::scaled_t;
    const SimulatedData s = simulate(c);
    const Eigen::ArrayXd e = (s.data.y.col(1) - c.true_params.lambda(1) * s.latent).array();
    const double var = e.square().mean();
    CHECK_THAT(var, WithinAbs(c.true_params.theta(1) * c.true_params.theta(1), 0.02));
    CHECK(e.pow(4).mean() / (var * var) > 4.0);  // t(5) kurtosis is 9
}

TEST_CASE("replications are reproducible and distinct") {
    const SimConfig c = base_config(50);
    const SimulatedData a = simulate(c, 3), b = simulate(c, 3), d = simulate(c, 4);
    CHECK(a.data.y == b.data.y);
    CHECK(a.data.x == b.data.x);
    CHECK(a.data.y != d.data.y);
    CHECK(replication_seed(7, 3) != replication_seed(7, 4));
    CHECK(replication_seed(7, 3) != replication_seed(8, 3));
}

TEST_CASE("zero error SDs give a deterministic relation") {
    SimConfig c = base_config(30);
    c.true_params.theta.setZero();
    c.true_params.sigma = 0.0;
    const SimulatedData s = simulate(c);
    const Eigen::VectorXd eta = s.data.x * c.true_params.beta;
    CHECK((s.latent - eta).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((s.data.y.col(2) - c.true_params.lambda(2) * eta).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("cause matrix is used verbatim") {
    SimConfig c = base_config(20);
    c.causes = CauseDistribution::from_matrix;
    c.cause_matrix = Eigen::MatrixXd::Random(20, 6);
    CHECK(simulate(c).data.x == c.cause_matrix);
    c.cause_matrix = Eigen::MatrixXd::Random(19, 6);
    CHECK_THROWS_AS(simulate(c), SchemaError);
}

TEST_CASE("invalid simulation settings") {
    SimConfig c = base_config(100);
    c.errors = ErrorDistribution::scaled_t;
    c.t_df = 2.0;
    CHECK_THROWS_AS(simulate(c), SchemaError);
    c = base_config(100);
    c.true_params.theta(0) = -1.0;
    CHECK_THROWS_AS(simulate(c), SchemaError);
}

TEST_CASE("recovery study is thread-count independent") {
    const SimConfig c = base_config(300);
    FitConfig f;
    const RecoveryReport one = recovery_study(c, 6, f, 1);
    const RecoveryReport many = recovery_study(c, 6, f, 4);
    REQUIRE(one.successful == 6);
    REQUIRE(many.successful == 6);
    for (std::size_t j = 0; j < one.parameters.size(); ++j) {
        CHECK(one.parameters[j].mean_estimate == many.parameters[j].mean_estimate);
        CHECK(one.parameters[j].coverage_mlr == many.parameters[j].coverage_mlr);
    }
    CHECK(one.parameters.size() == c.spec.free_parameter_count());
    CHECK(one.mean_coverage_error(SeMethod::naive) >= 0.0);
}

TEST_CASE("raw table simulation follows the input schema") {
    RawTableSimConfig rc;
    rc.n_regions = 12;
    rc.causes = variant_causes(ModelVariant::B);
    rc.true_params = default_true_parameters(5, rc.causes.size());
    rc.seed = 3;
    const RawQueryTable t = simulate_raw_table(rc);
    CHECK(t.rows.size() == 24);
    CHECK(t.periods() == std::vector<std::string>{"2014", "2015"});
    for (const auto& r : t.rows) {
        double sum = 0.0;
        for (double v : r.counts) {
            CHECK(v >= 0.0);
            CHECK(v == std::round(v));
            sum += v;
        }
        CHECK(sum <= r.total);
    }
    // Causes are region attributes shared across periods.
    CHECK(t.rows_for("2014")[5].causes == t.rows_for("2015")[5].causes);
}

TEST_CASE("reduced-form residual covariance approaches Omega") {
    SimConfig c = base_config(100000);
    c.seed = 71;
    const SimulatedData s = simulate(c);
    const ImpliedMoments m = implied_moments(c.spec, c.true_params);
    const Eigen::MatrixXd v = s.data.y - s.data.x * m.pi;
    const Eigen::MatrixXd cov = v.transpose() * v / static_cast<double>(c.n);
    CHECK((cov - m.omega).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("two replications give a well-formed report") {
    const RecoveryReport r = recovery_study(base_config(200), 2, {}, 1);
    CHECK(r.replications == 2);
    CHECK(r.successful == 2);
    CHECK(r.failures.empty());
    for (const auto& p : r.parameters) {
        CHECK(std::isfinite(p.empirical_sd));
        CHECK(p.empirical_sd >= 0.0);
        CHECK(p.coverage_naive >= 0.0);
        CHECK(p.coverage_naive <= 1.0);
    }
    CHECK_THROWS_AS(recovery_study(base_config(200), 1, {}, 1), SchemaError);
}
