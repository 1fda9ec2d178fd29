#include "optimizer.hpp"

#include <cmath>
#include <limits>

namespace mimic::detail {

namespace {

double max_norm(const Eigen::VectorXd& g) { return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff(); }

struct LineSearchResult {
    bool ok = false;
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
};

LineSearchResult backtrack(const Objective& f, const Eigen::VectorXd& x, double value, const Eigen::VectorXd& grad,
                           const Eigen::VectorXd& direction) {
    constexpr double c1 = 1e-4;
    const double slope = grad.dot(direction);
    LineSearchResult out;
    if (!(slope < 0.0)) return out;
    double step = 1.0;
    for (int i = 0; i < 60; ++i) {
        Eigen::VectorXd trial = x + step * direction;
        double v = 0.0;
        Eigen::VectorXd g;
        if (f(trial, v, g) && std::isfinite(v) && v <= value + c1 * step * slope) {
            out.ok = true;
            out.x = std::move(trial);
            out.value = v;
            out.gradient = std::move(g);
            return out;
        }
        step *= 0.5;
    }
    return out;
}

}  // namespace

Eigen::MatrixXd finite_difference_hessian(const Objective& f, const Eigen::VectorXd& x, double relative_step) {
    const auto n = x.size();
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double step = relative_step * std::max(1.0, std::abs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        double vp = 0.0, vm = 0.0;
        Eigen::VectorXd gp, gm;
        if (!f(xp, vp, gp) || !f(xm, vm, gm)) {
            h.setConstant(std::numeric_limits<double>::quiet_NaN());
            return h;
        }
        h.col(j) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

OptimResult minimize(const Objective& f, Eigen::VectorXd x0, const OptimOptions& options) {
    OptimResult res;
    res.x = std::move(x0);
    if (!f(res.x, res.value, res.gradient)) {
        res.value = std::numeric_limits<double>::infinity();
        return res;
    }
    const auto n = res.x.size();
    Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
    bool first = true;

    while (res.iterations < options.max_iterations) {
        if (max_norm(res.gradient) < options.gradient_tolerance) {
            res.converged = true;
            return res;
        }
        Eigen::VectorXd dir = -inv_h * res.gradient;
        if (!(res.gradient.dot(dir) < 0.0)) {
            inv_h.setIdentity();
            dir = -res.gradient;
        }
        LineSearchResult ls = backtrack(f, res.x, res.value, res.gradient, dir);
        if (!ls.ok) {
            if (first) break;
            inv_h.setIdentity();
            first = true;
            ls = backtrack(f, res.x, res.value, res.gradient, -res.gradient);
            if (!ls.ok) break;
        }
        ++res.iterations;
        const Eigen::VectorXd s = ls.x - res.x;
        const Eigen::VectorXd y = ls.gradient - res.gradient;
        const double change = std::abs(res.value - ls.value) / std::max(1.0, std::abs(res.value));
        res.x = std::move(ls.x);
        res.value = ls.value;
        res.gradient = std::move(ls.gradient);

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (first) {
                inv_h = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                first = false;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            inv_h = left * inv_h * left.transpose() + rho * s * s.transpose();
        }
        if (change < options.relative_tolerance) break;
    }

    // Newton polishing with Levenberg damping.
    for (int polish = 0; polish < 25 && res.iterations < options.max_iterations &&
                         max_norm(res.gradient) >= options.gradient_tolerance;
         ++polish) {
        Eigen::MatrixXd h = finite_difference_hessian(f, res.x);
        if (!h.allFinite()) break;
        const double scale = std::max(1e-8, h.diagonal().cwiseAbs().maxCoeff());
        Eigen::VectorXd dir;
        double ridge = 0.0;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd damped = h;
            damped.diagonal().array() += ridge;
            Eigen::LLT<Eigen::MatrixXd> llt(damped);
            if (llt.info() == Eigen::Success) {
                dir = -llt.solve(res.gradient);
                if (res.gradient.dot(dir) < 0.0) break;
            }
            ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 10.0;
            dir.resize(0);
        }
        if (dir.size() == 0) break;
        // Near the optimum the decrease drops below rounding in the objective;
        // accept a full step that stays level and shrinks the gradient.
        {
            Eigen::VectorXd trial = res.x + dir;
            double v = 0.0;
            Eigen::VectorXd g;
            if (f(trial, v, g) && std::isfinite(v) &&
                v <= res.value + 1e-11 * std::max(1.0, std::abs(res.value)) && max_norm(g) < max_norm(res.gradient)) {
                ++res.iterations;
                res.x = std::move(trial);
                res.value = v;
                res.gradient = std::move(g);
                continue;
            }
        }
        LineSearchResult ls = backtrack(f, res.x, res.value, res.gradient, dir);
        if (!ls.ok) break;
        ++res.iterations;
        res.x = std::move(ls.x);
        res.value = ls.value;
        res.gradient = std::move(ls.gradient);
    }
    res.converged = max_norm(res.gradient) < options.gradient_tolerance;
    return res;
}

}  // namespace mimic::detail
