#include <catch_amalgamated.hpp>

#include "mimic/ekc.hpp"
#include "mimic/errors.hpp"

#include <cmath>
#include <random>

using namespace mimic;
using Catch::Matchers::WithinAbs;

namespace {

Eigen::VectorXd uneven_x(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    std::sort(x.data(), x.data() + n);
    return x;
}

// Local weighted least squares at x0 on the raw (x - x0) basis.
double local_fit_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double x0, double span, int degree) {
    const auto n = x.size();
    std::vector<double> d(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d[i] = std::abs(x(i) - x0);
    std::vector<double> s = d;
    std::sort(s.begin(), s.end());
    const double h = s[static_cast<std::size_t>(std::floor(span * n)) - 1] * (1.0 + 1e-10);
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = d[i] / h;
        const double w = r < 1.0 ? std::pow(1.0 - r * r * r, 3) : 0.0;
        for (int c = 0; c <= degree; ++c) a(i, c) = std::sqrt(w) * std::pow(x(i) - x0, c);
        b(i) = std::sqrt(w) * y(i);
    }
    return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace

TEST_CASE("loess reproduces polynomials of its degree") {
    const Eigen::VectorXd x = uneven_x(60, 1);
    const Eigen::VectorXd line = (2.0 - 0.7 * x.array()).matrix();
    const Eigen::VectorXd quad = (1.0 + 0.3 * x.array() - 0.25 * x.array().square()).matrix();
    for (int degree : {1, 2}) {
        const CurveEstimate c = loess_fit(x, line, LoessConfig{0.4, degree, 50, 1.96});
        CHECK((c.fitted - (2.0 - 0.7 * c.grid.array()).matrix()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(c.residual_sd < 1e-8);
    }
    const CurveEstimate c = loess_fit(x, quad, LoessConfig{0.3, 2, 50, 1.96});
    const Eigen::ArrayXd g = c.grid.array();
    CHECK((c.fitted.array() - (1.0 + 0.3 * g - 0.25 * g.square())).abs().maxCoeff() < 1e-8);
}

TEST_CASE("loess is a linear smoother") {
    const Eigen::VectorXd x = uneven_x(40, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    Eigen::VectorXd a(40), b(40);
    for (int i = 0; i < 40; ++i) a(i) = z(rng), b(i) = z(rng);
    const LoessConfig cfg;
    const CurveEstimate fa = loess_fit(x, a, cfg), fb = loess_fit(x, b, cfg), fab = loess_fit(x, a + 2.5 * b, cfg);
    CHECK((fab.fitted - fa.fitted - 2.5 * fb.fitted).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("loess matches a direct local weighted regression") {
    const Eigen::VectorXd x = uneven_x(50, 4);
    const Eigen::VectorXd y = x.array().sin().matrix();
    for (double x0 : {0.5, 3.3, 7.1, 9.9}) {
        const double got = loess_weights(x, x0, 0.5, 2).dot(y);
        CHECK_THAT(got, WithinAbs(local_fit_oracle(x, y, x0, 0.5, 2), 1e-9));
    }
}

TEST_CASE("loess band and bookkeeping") {
    const Eigen::VectorXd x = uneven_x(81, 5);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    Eigen::VectorXd y(81);
    for (int i = 0; i < 81; ++i) y(i) = std::sin(x(i) / 3.0) + 0.3 * z(rng);
    const CurveEstimate c = loess_fit(x, y);
    CHECK(c.grid.size() == 100);
    CHECK(c.grid(0) == x.minCoeff());
    CHECK(c.grid(99) == x.maxCoeff());
    CHECK((c.ci_upper - c.ci_lower).minCoeff() > 0.0);
    CHECK((c.ci_upper - c.fitted - 1.96 * c.standard_error).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(c.equivalent_df > 2.0);
    CHECK(c.equivalent_df < 10.0);
    CHECK_THAT(c.residual_sd, WithinAbs(0.3, 0.1));
}

TEST_CASE("loess input errors") {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, 0, 1);
    CHECK_THROWS_AS(loess_fit(x, Eigen::VectorXd::Zero(9)), SchemaError);
    CHECK_THROWS_AS(loess_fit(Eigen::VectorXd::Constant(10, 1.0), x), SchemaError);
    CHECK_THROWS_AS(loess_fit(x, x, LoessConfig{0.0, 2, 10, 1.96}), SchemaError);
}

TEST_CASE("loess widens a window that holds too few distinct points") {
    Eigen::VectorXd x(12);
    x << 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 3, 4;
    const Eigen::VectorXd y = (1.0 + 2.0 * x.array()).matrix();
    const Eigen::VectorXd l = loess_weights(x, 0.0, 0.3, 2);
    CHECK_THAT(l.dot(y), WithinAbs(1.0, 1e-9));
}

TEST_CASE("cubic trend with the 2014 model-A coefficients") {
    const std::array<double, 3> b{2.618, -6.671, 4.513};
    const Eigen::VectorXd t = cubic_trend(b, Eigen::Vector2d(0.0, 1.0));
    CHECK_THAT(t(0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(t(1), WithinAbs(0.460, 1e-12));
    const auto roots = cubic_trend_turning_points(b);
    REQUIRE(roots.size() == 2);
    CHECK(roots[0] > 0.0);
    CHECK(roots[1] > roots[0]);
    for (double r : roots) CHECK_THAT(b[0] + 2 * b[1] * r + 3 * b[2] * r * r, WithinAbs(0.0, 1e-12));
    // Rises, falls, rises again.
    const Eigen::VectorXd probe = cubic_trend(b, Eigen::Vector3d(roots[0], (roots[0] + roots[1]) / 2, roots[1]));
    CHECK(probe(1) < probe(0));
    CHECK(probe(2) < probe(1));
    CHECK(cubic_trend_turning_points({1.0, 0.0, 1.0}).empty());
}

TEST_CASE("raw-axis trend standardizes each power") {
    const std::array<double, 3> b{0.5, -0.2, 0.1};
    const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(5, 1.0, 3.0);
    CHECK((cubic_trend_raw(b, {0, 0, 0}, {1, 1, 1}, g) - cubic_trend(b, g)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd r = cubic_trend_raw(b, {2.0, 5.0, 13.0}, {1.0, 3.0, 10.0}, g);
    CHECK_THAT(r(0), WithinAbs(0.5 * (1 - 2) - 0.2 * (1 - 5) / 3.0 + 0.1 * (1 - 13) / 10.0, 1e-12));
}

TEST_CASE("polynomial coefficients need all three powers") {
    ModelSpec s;
    s.indicator_names = {"a", "b"};
    s.cause_names = {"grp_pc3", "x", "grp_pc", "grp_pc2"};
    ParameterSet p;
    p.lambda = Eigen::Vector2d::Ones();
    p.beta = Eigen::Vector4d(3.0, 9.0, 1.0, 2.0);
    p.theta = Eigen::Vector2d::Ones();
    p.sigma = 1.0;
    CHECK(grp_polynomial_coefficients(s, p) == std::array<double, 3>{1.0, 2.0, 3.0});
    s.cause_names[0] = "other";
    CHECK_THROWS_AS(grp_polynomial_coefficients(s, p), SchemaError);
}

TEST_CASE("pointwise band covers the true curve") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 2.0 * 3.141592653589793);
    std::normal_distribution<double> z(0.0, 0.1);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(100, 0.3, 6.0);
    const LoessConfig cfg{0.3, 2, 100, 1.96};
    int inside = 0, total = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd x(500), y(500);
        for (int i = 0; i < 500; ++i) {
            x(i) = u(rng);
            y(i) = std::sin(x(i)) + z(rng);
        }
        const CurveEstimate c = loess_fit(x, y, grid, cfg);
        for (Eigen::Index g = 0; g < grid.size(); ++g) {
            const double truth = std::sin(grid(g));
            inside += c.ci_lower(g) <= truth && truth <= c.ci_upper(g);
            ++total;
        }
    }
    CHECK(static_cast<double>(inside) / total >= 0.9);
}
