#include "mimic/scoring.hpp"

#include "mimic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace mimic {

Eigen::VectorXd factor_scores(const Dataset& data, const ModelSpec& spec, const ParameterSet& params) {
    data.validate_shape(spec);
    params.validate(spec);
    // Woodbury on Omega = Theta^2 + sigma^2 lambda lambda' keeps the
    // noiseless-indicator limit (theta_i -> 0) well conditioned.
    const Eigen::VectorXd w = params.lambda.cwiseQuotient(params.theta.cwiseAbs2());  // Theta^-2 lambda
    const double s2 = params.sigma * params.sigma;
    const double denom = 1.0 + s2 * params.lambda.dot(w);
    if (!std::isfinite(denom) || denom <= 0.0) throw SingularityError("implied covariance is singular");

    const Eigen::VectorXd mean_eta = data.x * params.beta;
    const Eigen::MatrixXd resid = data.y - mean_eta * params.lambda.transpose();
    return mean_eta + (s2 / denom) * (resid * w);
}

Eigen::VectorXd factor_scores(const Dataset& data, const ModelSpec& spec, const FitResult& fit) {
    return factor_scores(data, spec, fit.params);
}

Eigen::VectorXd scale_index(const Eigen::VectorXd& raw) {
    const auto n = raw.size();
    if (n < 2) throw SchemaError("need at least two scores to standardize");
    const double mean = raw.mean();
    const double sd = std::sqrt((raw.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) throw SingularityError("scores have zero variance");
    return 100.0 * (raw.array() - mean) / sd;
}

IndexTable rank_units(IndexTable table, TieBreak ties) {
    const auto n = table.scaled_index.size();
    if (table.unit_labels.size() != static_cast<std::size_t>(n)) {
        throw SchemaError("index table has mismatched label and index lengths");
    }
    if (!table.scaled_index.allFinite()) throw SchemaError("index table contains non-finite values");

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& idx = table.scaled_index;
    const auto& labels = table.unit_labels;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = idx(static_cast<Eigen::Index>(a));
        const double vb = idx(static_cast<Eigen::Index>(b));
        if (va != vb) return va > vb;
        if (ties == TieBreak::label) return labels[a] < labels[b];
        return false;
    });
    table.rank.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) table.rank[order[pos]] = static_cast<int>(pos + 1);
    return table;
}

IndexTable build_index_table(const Dataset& data, const ModelSpec& spec, const FitResult& fit, TieBreak ties) {
    IndexTable table;
    table.unit_labels = data.unit_labels;
    if (table.unit_labels.empty()) {
        for (std::size_t i = 0; i < data.n(); ++i) table.unit_labels.push_back("unit" + std::to_string(i + 1));
    }
    table.period_label = data.period_label;
    table.raw_score = factor_scores(data, spec, fit);
    table.scaled_index = scale_index(table.raw_score);
    return rank_units(std::move(table), ties);
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2) throw SchemaError("correlation needs two equal-length vectors");
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double denom = std::sqrt(da.square().sum() * db.square().sum());
    if (!(denom > 0.0)) throw SingularityError("correlation undefined for a constant vector");
    return (da * db).sum() / denom;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return v(static_cast<Eigen::Index>(a)) < v(static_cast<Eigen::Index>(b));
    });
    Eigen::VectorXd ranks(v.size());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v(static_cast<Eigen::Index>(order[j + 1])) == v(static_cast<Eigen::Index>(order[i]))) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks(static_cast<Eigen::Index>(order[t])) = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return pearson_correlation(average_ranks(a), average_ranks(b));
}

PeriodComparison compare_periods(const IndexTable& a, const IndexTable& b) {
    std::map<std::string, std::size_t> pos_b;
    for (std::size_t i = 0; i < b.unit_labels.size(); ++i) pos_b[b.unit_labels[i]] = i;
    const std::set<std::string> set_a(a.unit_labels.begin(), a.unit_labels.end());

    std::vector<std::string> only_a, only_b;
    for (const auto& l : set_a) {
        if (!pos_b.contains(l)) only_a.push_back(l);
    }
    for (const auto& [l, _] : pos_b) {
        if (!set_a.contains(l)) only_b.push_back(l);
    }
    if (!only_a.empty() || !only_b.empty()) {
        std::string msg = "unit label sets differ;";
        if (!only_a.empty()) {
            msg += " only in " + a.period_label + ":";
            for (const auto& l : only_a) msg += " " + l;
            msg += ";";
        }
        if (!only_b.empty()) {
            msg += " only in " + b.period_label + ":";
            for (const auto& l : only_b) msg += " " + l;
        }
        throw SchemaError(msg);
    }

    PeriodComparison cmp;
    cmp.period_a = a.period_label;
    cmp.period_b = b.period_label;
    const auto n = static_cast<Eigen::Index>(a.unit_labels.size());
    Eigen::VectorXd va(n), vb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t j = pos_b.at(a.unit_labels[static_cast<std::size_t>(i)]);
        PeriodComparisonRow row;
        row.unit = a.unit_labels[static_cast<std::size_t>(i)];
        row.index_a = a.scaled_index(i);
        row.index_b = b.scaled_index(static_cast<Eigen::Index>(j));
        row.rank_a = a.rank.empty() ? 0 : a.rank[static_cast<std::size_t>(i)];
        row.rank_b = b.rank.empty() ? 0 : b.rank[j];
        va(i) = row.index_a;
        vb(i) = row.index_b;
        cmp.rows.push_back(std::move(row));
    }
    cmp.pearson = pearson_correlation(va, vb);
    cmp.spearman = spearman_correlation(va, vb);
    return cmp;
}

}  // namespace mimic
