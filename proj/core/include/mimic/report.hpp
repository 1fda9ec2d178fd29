#pragma once

#include "mimic/diagnostics.hpp"
#include "mimic/ekc.hpp"
#include "mimic/estimation.hpp"
#include "mimic/scoring.hpp"
#include "mimic/simulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mimic {

/// Everything reported for one fitted period.
struct PeriodFit {
    std::string period;
    std::string variant;
    ModelSpec spec;
    Dataset data;
    FitResult fit;
    FitIndices indices;
    MardiaResult mardia;
};

/// One row of the parameter table on the standardized (sum lambda = 1) scale.
struct ReportRow {
    std::string section;  // lambda, beta, theta, sigma
    std::string name;
    double estimate = 0.0;
    double estimate_identified = 0.0;
    double se = 0.0;  // max of the corrected SEs; NaN when unavailable
    double se_naive = 0.0;
    double se_mlm = 0.0;
    double se_mlr = 0.0;
    Stars stars = Stars::none;
};

/// Rows in display order: loadings, causes, error SDs, sigma. Standardized
/// SEs come from the delta method; the fixed loading has none.
std::vector<ReportRow> report_rows(const PeriodFit& pf);

/// Long-form CSV: period,section,parameter,estimate,se,stars,se_naive,se_mlm,se_mlr,estimate_identified
/// followed by fit rows (n, loglik, aic, bic, cfi, rmsea, srmr, chisq, df, mlm_scaling).
void write_fit_report_csv(std::ostream& out, const std::vector<PeriodFit>& fits);
std::string fit_report_json(const std::vector<PeriodFit>& fits);
/// Side-by-side text table, one column pair (estimate, stars) per period.
void write_fit_report_text(std::ostream& out, const std::vector<PeriodFit>& fits);

/// unit,period,raw_score,index,rank
void write_index_table(std::ostream& out, const IndexTable& table);
/// unit,index_a,index_b,rank_a,rank_b
void write_comparison(std::ostream& out, const PeriodComparison& cmp);
/// period_a,period_b,n,pearson,spearman
void write_comparison_summary(std::ostream& out, const PeriodComparison& cmp);
/// grp,fitted,lo,hi
void write_curve(std::ostream& out, const CurveEstimate& curve);
/// grp,trend
void write_trend(std::ostream& out, const Eigen::VectorXd& grid, const Eigen::VectorXd& trend);
/// unit, indicator columns, cause columns
void write_dataset(std::ostream& out, const Dataset& data, const ModelSpec& spec);
/// parameter,truth,mean_estimate,bias,empirical_sd,mean_se_naive,mean_se_mlm,mean_se_mlr,coverage_naive,coverage_mlm,coverage_mlr
void write_recovery(std::ostream& out, const RecoveryReport& report);
void write_recovery_summary(std::ostream& out, const RecoveryReport& report);

/// Display label for an indicator or cause name (falls back to the name).
std::string display_label(const std::string& name);

}  // namespace mimic
