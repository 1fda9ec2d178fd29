#pragma once

#include "mimic/estimation.hpp"
#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mimic {

/// Per-unit latent scores, the x100 scaled index, and ranks for one period.
struct IndexTable {
    std::vector<std::string> unit_labels;
    Eigen::VectorXd raw_score;
    Eigen::VectorXd scaled_index;
    std::vector<int> rank;  // 1 = largest index
    std::string period_label;
};

/// E[eta | y_n, x_n] under the fitted model:
/// beta' x_n + sigma^2 lambda' Omega^-1 (y_n - lambda beta' x_n).
Eigen::VectorXd factor_scores(const Dataset& data, const ModelSpec& spec, const ParameterSet& params);
Eigen::VectorXd factor_scores(const Dataset& data, const ModelSpec& spec, const FitResult& fit);

/// 100 * (raw - mean) / sd, sample SD. Throws SingularityError on zero variance.
Eigen::VectorXd scale_index(const Eigen::VectorXd& raw);

enum class TieBreak {
    label,        // equal indices ordered by unit label
    input_order,  // equal indices keep their input order
};

/// Fills `rank` from `scaled_index` (descending).
IndexTable rank_units(IndexTable table, TieBreak ties = TieBreak::label);

/// Scores, scales and ranks in one step.
IndexTable build_index_table(const Dataset& data, const ModelSpec& spec, const FitResult& fit,
                             TieBreak ties = TieBreak::label);

struct PeriodComparisonRow {
    std::string unit;
    double index_a = 0.0;
    double index_b = 0.0;
    int rank_a = 0;
    int rank_b = 0;
};

struct PeriodComparison {
    std::string period_a;
    std::string period_b;
    std::vector<PeriodComparisonRow> rows;  // in the unit order of table a
    double pearson = 0.0;
    double spearman = 0.0;
};

/// Throws SchemaError listing the symmetric difference when label sets differ.
PeriodComparison compare_periods(const IndexTable& a, const IndexTable& b);

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Average ranks (ties share the mean of their positions), ascending.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& v);

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace mimic
