#include "mimic/ekc.hpp"

#include "mimic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mimic {

namespace {

double tricube(double u) {
    const double a = std::abs(u);
    if (a >= 1.0) return 0.0;
    const double t = 1.0 - a * a * a;
    return t * t * t;
}

}  // namespace

Eigen::VectorXd loess_weights(const Eigen::VectorXd& x, double x0, double span, int degree) {
    const auto n = x.size();
    const int cols = degree + 1;
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = std::abs(x(i) - x0);
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());

    auto q = static_cast<Eigen::Index>(std::floor(span * static_cast<double>(n)));
    q = std::clamp<Eigen::Index>(q, std::min<Eigen::Index>(cols, n), n);

    for (;; ++q) {
        double h = sorted[static_cast<std::size_t>(std::min(q, n) - 1)];
        if (span > 1.0) h *= span;
        // Strictly positive radius so the q-th neighbour keeps a small weight.
        h = std::max(h, 1e-12) * (1.0 + 1e-10);

        Eigen::MatrixXd design(n, cols);
        Eigen::VectorXd w(n);
        const double scale = h;
        for (Eigen::Index i = 0; i < n; ++i) {
            w(i) = tricube(dist[static_cast<std::size_t>(i)] / h);
            const double u = (x(i) - x0) / scale;
            double pw = 1.0;
            for (int c = 0; c < cols; ++c) {
                design(i, c) = pw;
                pw *= u;
            }
        }
        const Eigen::MatrixXd xtw = design.transpose() * w.asDiagonal();
        const Eigen::MatrixXd gram = xtw * design;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        lu.setThreshold(1e-10);
        if (lu.rank() == cols) {
            // Fitted value at x0 is the intercept (u = 0).
            const Eigen::RowVectorXd e0 = lu.solve(Eigen::VectorXd::Unit(cols, 0)).transpose();
            return (e0 * xtw).transpose();
        }
        if (q >= n) {
            if (span > 1e6) throw SingularityError("local design is singular even with all observations");
            span *= 2.0;  // all points already in the window; widen the radius instead
        }
    }
}

CurveEstimate loess_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const LoessConfig& config) {
    if (x.size() == 0) throw SchemaError("loess needs data");
    const double lo = x.minCoeff();
    const double hi = x.maxCoeff();
    const int g = std::max(2, config.grid_points);
    return loess_fit(x, y, Eigen::VectorXd::LinSpaced(g, lo, hi), config);
}

CurveEstimate loess_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& grid,
                        const LoessConfig& config) {
    const auto n = x.size();
    if (y.size() != n) throw SchemaError("loess x and y lengths differ");
    if (config.degree < 0 || config.degree > 3) throw SchemaError("loess degree must be 0..3");
    if (n < config.degree + 2) throw SchemaError("loess needs at least degree + 2 observations");
    if (!(config.span > 0.0)) throw SchemaError("loess span must be positive");
    if (x.maxCoeff() == x.minCoeff()) throw SchemaError("loess x values are all equal");
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        if (!(grid(i) > grid(i - 1))) throw SchemaError("loess grid must be strictly increasing");
    }

    // Hat matrix at the data for the residual variance.
    Eigen::MatrixXd hat(n, n);
    for (Eigen::Index i = 0; i < n; ++i) hat.row(i) = loess_weights(x, x(i), config.span, config.degree).transpose();
    const Eigen::VectorXd resid = y - hat * y;
    const Eigen::MatrixXd resid_op = Eigen::MatrixXd::Identity(n, n) - hat;
    const double delta1 = (resid_op.transpose() * resid_op).trace();

    CurveEstimate out;
    out.degree = config.degree;
    out.bandwidth_span = config.span;
    out.equivalent_df = hat.trace();
    out.residual_sd = delta1 > 0.0 ? std::sqrt(resid.squaredNorm() / delta1) : 0.0;

    const auto g = grid.size();
    out.grid = grid;
    out.fitted.resize(g);
    out.standard_error.resize(g);
    for (Eigen::Index j = 0; j < g; ++j) {
        const Eigen::VectorXd l = loess_weights(x, grid(j), config.span, config.degree);
        out.fitted(j) = l.dot(y);
        out.standard_error(j) = out.residual_sd * l.norm();
    }
    out.ci_lower = out.fitted - config.z_critical * out.standard_error;
    out.ci_upper = out.fitted + config.z_critical * out.standard_error;
    return out;
}

std::array<double, 3> grp_polynomial_coefficients(const ModelSpec& spec, const ParameterSet& params) {
    std::array<double, 3> coef{};
    for (std::size_t power = 0; power < kGrpPolynomialCauses.size(); ++power) {
        const auto it = std::find(spec.cause_names.begin(), spec.cause_names.end(), kGrpPolynomialCauses[power]);
        if (it == spec.cause_names.end()) {
            throw SchemaError(std::string("model has no '") + kGrpPolynomialCauses[power] + "' cause; cubic trend undefined");
        }
        coef[power] = params.beta(static_cast<Eigen::Index>(it - spec.cause_names.begin()));
    }
    return coef;
}

Eigen::VectorXd cubic_trend(const std::array<double, 3>& c, const Eigen::VectorXd& grid) {
    return (grid.array() * (c[0] + grid.array() * (c[1] + grid.array() * c[2]))).matrix();
}

Eigen::VectorXd cubic_trend(const ModelSpec& spec, const FitResult& fit, const Eigen::VectorXd& grid) {
    return cubic_trend(grp_polynomial_coefficients(spec, fit.params), grid);
}

Eigen::VectorXd cubic_trend_raw(const std::array<double, 3>& c, const std::array<double, 3>& means,
                                const std::array<double, 3>& sds, const Eigen::VectorXd& raw_grid) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(raw_grid.size());
    for (Eigen::Index i = 0; i < raw_grid.size(); ++i) {
        double power = 1.0;
        for (std::size_t d = 0; d < 3; ++d) {
            power *= raw_grid(i);
            out(i) += c[d] * (power - means[d]) / sds[d];
        }
    }
    return out;
}

std::vector<double> cubic_trend_turning_points(const std::array<double, 3>& c) {
    // 3 b3 g^2 + 2 b2 g + b1 = 0
    const double a = 3.0 * c[2];
    const double b = 2.0 * c[1];
    const double k = c[0];
    std::vector<double> roots;
    if (a == 0.0) {
        if (b != 0.0) roots.push_back(-k / b);
        return roots;
    }
    const double disc = b * b - 4.0 * a * k;
    if (disc < 0.0) return roots;
    const double sq = std::sqrt(disc);
    // Numerically stable pair.
    const double qv = -0.5 * (b + std::copysign(sq, b));
    roots.push_back(qv / a);
    if (qv != 0.0) roots.push_back(k / qv);
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace mimic
