#include <catch_amalgamated.hpp>

#include "mimic/errors.hpp"
#include "mimic/likelihood.hpp"
#include "oracles.hpp"

using namespace mimic;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("loglik matches the density-sum oracle") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t p = 2 + rep % 3, k = 1 + rep % 3, n = 6 + rep % 5;
        const auto in = oracle::random_instance(rng, p, k, n);
        const double got = log_likelihood(in.data, in.spec, in.params);
        CHECK_THAT(got, WithinAbs(oracle::density_sum_loglik(in.data.y, in.data.x, in.params), 1e-10));
        CHECK_THAT(log_likelihood(CrossProducts::from(in.data), in.spec, in.params), WithinAbs(got, 1e-10));
    }
}

TEST_CASE("single standard normal observation") {
    const ModelSpec s = ModelSpec::make(1, 1);
    Dataset d;
    d.y = Eigen::MatrixXd::Zero(1, 1);
    d.x = Eigen::MatrixXd::Zero(1, 1);
    ParameterSet p;
    p.lambda = Eigen::VectorXd::Ones(1);
    p.beta = Eigen::VectorXd::Zero(1);
    p.theta = Eigen::VectorXd::Ones(1);
    p.sigma = 0.0;
    CHECK_THAT(log_likelihood(d, s, p), WithinAbs(-0.5 * std::log(2.0 * 3.14159265358979323846), 1e-15));
}

TEST_CASE("residual cross product matches the loop oracle") {
    std::mt19937_64 rng(12);
    const auto in = oracle::random_instance(rng, 3, 2, 9);
    const Eigen::MatrixXd w = residual_cross_product(in.data, implied_moments(in.spec, in.params));
    const auto ref = oracle::residual_outer_sum(in.data.y, in.data.x, in.params);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK_THAT(w(i, j), WithinAbs(ref[i][j], 1e-12));
}

TEST_CASE("residual cross product examples") {
    const ModelSpec s = ModelSpec::make(1, 1);
    Dataset d;
    d.x = Eigen::Vector2d(1.0, 1.0);
    d.y = Eigen::Vector2d(2.0, 0.0);
    ImpliedMoments m;
    m.pi = Eigen::MatrixXd::Ones(1, 1);
    m.omega = Eigen::MatrixXd::Ones(1, 1);
    CHECK(residual_cross_product(d, m)(0, 0) == 2.0);
    d.y = d.x * 1.0;
    CHECK(residual_cross_product(d, m).isZero(0.0));
    m.pi = Eigen::MatrixXd::Ones(2, 1);
    CHECK_THROWS_AS(residual_cross_product(d, m), SchemaError);
}

TEST_CASE("gradient agrees with central differences on both scales") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        auto in = oracle::random_instance(rng, 3 + rep % 2, 2, 30);
        in.params = identify(in.spec, in.params);
        const auto cp = CrossProducts::from(in.data);
        for (Scale scale : {Scale::natural, Scale::unconstrained}) {
            const Eigen::VectorXd x = pack(in.spec, in.params, scale);
            const auto v = evaluate_likelihood(cp, in.spec, in.params, scale);
            REQUIRE(v.finite);
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
                Eigen::VectorXd a = x, b = x;
                a(j) += h;
                b(j) -= h;
                const double fd = (log_likelihood(cp, in.spec, unpack(in.spec, a, scale)) -
                                   log_likelihood(cp, in.spec, unpack(in.spec, b, scale))) / (2 * h);
                CHECK_THAT(v.gradient(j), WithinAbs(fd, 1e-5 * std::max(1.0, std::abs(fd))));
            }
        }
    }
}

TEST_CASE("observation scores sum to the gradient") {
    std::mt19937_64 rng(14);
    auto in = oracle::random_instance(rng, 4, 3, 25);
    in.params = identify(in.spec, in.params);
    const Eigen::MatrixXd s = observation_scores(in.data, in.spec, in.params);
    const auto v = evaluate_likelihood(CrossProducts::from(in.data), in.spec, in.params, Scale::natural);
    CHECK((s.colwise().sum().transpose() - v.gradient).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("latent rescaling leaves the likelihood unchanged") {
    std::mt19937_64 rng(15);
    const auto in = oracle::random_instance(rng, 3, 2, 10);
    const double base = log_likelihood(in.data, in.spec, in.params);
    for (double c : {0.5, 2.0, -3.0})
        CHECK_THAT(log_likelihood(in.data, in.spec, rescale_latent(in.params, c)), WithinAbs(base, 1e-9));
}

TEST_CASE("pack and unpack round-trip") {
    std::mt19937_64 rng(16);
    auto in = oracle::random_instance(rng, 4, 2, 8);
    in.spec.fixed_loading = 2;
    in.params = identify(in.spec, in.params);
    for (Scale scale : {Scale::natural, Scale::unconstrained}) {
        const auto back = unpack(in.spec, pack(in.spec, in.params, scale), scale);
        CHECK((back.lambda - in.params.lambda).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((back.theta - in.params.theta).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_THAT(back.sigma, WithinRel(in.params.sigma, 1e-12));
    }
    const auto names = parameter_names(in.spec);
    CHECK(names.size() == in.spec.free_parameter_count());
    CHECK(names.back() == "sigma");
}

TEST_CASE("degenerate covariance is singular") {
    std::mt19937_64 rng(17);
    auto in = oracle::random_instance(rng, 3, 2, 10);
    in.params.theta.setConstant(1e-9);
    CHECK_THROWS_AS(log_likelihood(in.data, in.spec, in.params), SingularityError);
    const auto v = evaluate_likelihood(CrossProducts::from(in.data), in.spec, in.params, Scale::natural);
    CHECK_FALSE(v.finite);
}
