#include "mimic/report.hpp"

#include "mimic/csv.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace mimic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
using csv::format_number;

std::string fmt_fixed(double v, int digits) {
    if (!std::isfinite(v)) return "";
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << (v == 0.0 ? 0.0 : v);
    return s.str();
}

nlohmann::ordered_json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string display_label(const std::string& name) {
    static const std::map<std::string, std::string> labels{
        {"climate_change", "Climate Change"},
        {"endangered_environment", "Endangered Environment"},
        {"politics", "Politic Queries"},
        {"science", "Science Queries"},
        {"renewable_energy", "Renewable Energies/Technologies"},
        {"grp_pc", "GDP per Capita in ppp"},
        {"grp_pc2", "GDP per Capita^2 in ppp"},
        {"grp_pc3", "GDP per Capita^3 in ppp"},
        {"mining", "Mining"},
        {"manufacturing", "Manufacturing"},
        {"emissions_pc", "Emission per Capita"},
        {"pop_density", "Population Density"},
        {"age65", "People with Age 65+"},
        {"tertiary", "Labour Force with Tertiary Education"},
    };
    const auto it = labels.find(name);
    return it == labels.end() ? name : it->second;
}

std::vector<ReportRow> report_rows(const PeriodFit& pf) {
    const ModelSpec& spec = pf.spec;
    const FitResult& fit = pf.fit;
    const auto p = static_cast<Eigen::Index>(spec.p());
    const auto k = static_cast<Eigen::Index>(spec.k());

    const ParameterSet& sp = fit.params_standardized;
    Eigen::VectorXd std_est(2 * p + k + 1);
    std_est << sp.lambda, sp.beta, sp.theta, sp.sigma;
    Eigen::VectorXd ident(2 * p + k + 1);
    ident << fit.params.lambda, fit.params.beta, fit.params.theta, fit.params.sigma;

    const Eigen::VectorXd nan_vec = Eigen::VectorXd::Constant(2 * p + k + 1, kNaN);
    Eigen::VectorXd se_naive = nan_vec, se_mlm = nan_vec, se_mlr = nan_vec;
    const Eigen::MatrixXd jac = standardized_jacobian(spec, fit.params);
    auto project = [&](const Eigen::MatrixXd& cov) {
        return (jac * cov * jac.transpose()).diagonal().cwiseMax(0.0).cwiseSqrt().eval();
    };
    if (fit.cov_naive) {
        const Eigen::VectorXd base = project(*fit.cov_naive);
        if (fit.se_naive) se_naive = base;
        if (fit.se_mlm) se_mlm = base * std::sqrt(std::max(0.0, fit.mlm_scaling));
    }
    if (fit.cov_mlr) se_mlr = project(*fit.cov_mlr);

    std::vector<ReportRow> rows;
    for (Eigen::Index i = 0; i < std_est.size(); ++i) {
        ReportRow row;
        if (i < p) {
            row.section = "lambda";
            row.name = spec.indicator_names[static_cast<std::size_t>(i)];
        } else if (i < p + k) {
            row.section = "beta";
            row.name = spec.cause_names[static_cast<std::size_t>(i - p)];
        } else if (i < 2 * p + k) {
            row.section = "theta";
            row.name = spec.indicator_names[static_cast<std::size_t>(i - p - k)];
        } else {
            row.section = "sigma";
            row.name = "sigma";
        }
        row.estimate = std_est(i);
        row.estimate_identified = ident(i);
        const bool fixed = i == static_cast<Eigen::Index>(spec.fixed_loading);
        row.se_naive = fixed ? kNaN : se_naive(i);
        row.se_mlm = fixed ? kNaN : se_mlm(i);
        row.se_mlr = fixed ? kNaN : se_mlr(i);
        double corrected = kNaN;
        for (double s : {row.se_mlm, row.se_mlr}) {
            if (std::isfinite(s)) corrected = std::isfinite(corrected) ? std::max(corrected, s) : s;
        }
        row.se = std::isfinite(corrected) ? corrected : row.se_naive;
        const double ses[] = {row.se_mlm, row.se_mlr};
        const double naive_only[] = {row.se_naive};
        row.stars = std::isfinite(corrected) ? significance_stars(row.estimate, ses)
                                             : significance_stars(row.estimate, naive_only);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_fit_report_csv(std::ostream& out, const std::vector<PeriodFit>& fits) {
    csv::write_row(out, {"period", "section", "parameter", "estimate", "se", "stars", "se_naive", "se_mlm", "se_mlr",
                         "estimate_identified"});
    for (const auto& pf : fits) {
        for (const auto& r : report_rows(pf)) {
            csv::write_row(out, {pf.period, r.section, r.name, format_number(r.estimate), format_number(r.se),
                                 std::string(to_string(r.stars)), format_number(r.se_naive), format_number(r.se_mlm),
                                 format_number(r.se_mlr), format_number(r.estimate_identified)});
        }
        const FitIndices& fi = pf.indices;
        const std::vector<std::pair<std::string, double>> stats{
            {"n", static_cast<double>(pf.data.n())}, {"loglik", pf.fit.loglik},    {"aic", fi.aic},
            {"bic", fi.bic},                          {"cfi", fi.cfi},              {"rmsea", fi.rmsea},
            {"srmr", fi.srmr},                        {"chisq", fi.chisq_model},    {"df", fi.df_model},
            {"mlm_scaling", pf.fit.mlm_scaling},      {"mardia_pvalue", pf.mardia.omnibus_pvalue}};
        for (const auto& [name, v] : stats) {
            csv::write_row(out, {pf.period, "fit", name, format_number(v), "", "", "", "", "", ""});
        }
    }
}

std::string fit_report_json(const std::vector<PeriodFit>& fits) {
    nlohmann::ordered_json root;
    root["periods"] = nlohmann::ordered_json::array();
    for (const auto& pf : fits) {
        nlohmann::ordered_json j;
        j["period"] = pf.period;
        j["variant"] = pf.variant;
        j["n"] = pf.data.n();
        j["converged"] = pf.fit.converged;
        j["iterations"] = pf.fit.iterations;
        j["gradient_norm"] = pf.fit.gradient_norm;
        j["loglik"] = pf.fit.loglik;
        std::map<std::string, nlohmann::ordered_json> sections;
        for (const auto& r : report_rows(pf)) {
            nlohmann::ordered_json e;
            e["parameter"] = r.name;
            e["label"] = display_label(r.name);
            e["estimate"] = r.estimate;
            e["se"] = number_or_null(r.se);
            e["stars"] = std::string(to_string(r.stars));
            e["se_naive"] = number_or_null(r.se_naive);
            e["se_mlm"] = number_or_null(r.se_mlm);
            e["se_mlr"] = number_or_null(r.se_mlr);
            e["estimate_identified"] = r.estimate_identified;
            sections[r.section].push_back(std::move(e));
        }
        for (const char* s : {"lambda", "beta", "theta", "sigma"}) j[s] = sections[s];
        const FitIndices& fi = pf.indices;
        nlohmann::ordered_json f;
        f["number_of_observations"] = pf.data.n();
        f["aic"] = fi.aic;
        f["bic"] = fi.bic;
        f["cfi"] = fi.cfi;
        f["rmsea"] = fi.rmsea;
        f["srmr"] = fi.srmr;
        f["chisq_model"] = fi.chisq_model;
        f["df_model"] = fi.df_model;
        f["chisq_baseline"] = fi.chisq_baseline;
        f["df_baseline"] = fi.df_baseline;
        j["fit"] = f;
        j["mlm_scaling"] = pf.fit.mlm_scaling;
        nlohmann::ordered_json m;
        m["skewness_stat"] = pf.mardia.skewness_stat;
        m["skewness_pvalue"] = pf.mardia.skewness_pvalue;
        m["kurtosis_stat"] = pf.mardia.kurtosis_stat;
        m["kurtosis_pvalue"] = pf.mardia.kurtosis_pvalue;
        m["omnibus_pvalue"] = pf.mardia.omnibus_pvalue;
        m["rejected"] = pf.mardia.rejected;
        j["mardia"] = m;
        j["warnings"] = pf.fit.warnings;
        for (const auto& w : fi.warnings) j["warnings"].push_back(w);
        root["periods"].push_back(std::move(j));
    }
    return root.dump(2) + "\n";
}

void write_fit_report_text(std::ostream& out, const std::vector<PeriodFit>& fits) {
    constexpr int kLabel = 40;
    constexpr int kCol = 10;
    std::vector<std::vector<ReportRow>> rows;
    for (const auto& pf : fits) rows.push_back(report_rows(pf));

    out << std::left << std::setw(kLabel) << "Parameter";
    for (const auto& pf : fits) out << std::right << std::setw(kCol) << pf.period << std::setw(5) << "";
    out << '\n' << std::left << std::setw(kLabel) << "";
    for (const auto& pf : fits) out << std::right << std::setw(kCol) << ("(" + pf.variant + ")") << std::setw(5) << "";
    out << '\n';
    if (fits.empty()) return;

    std::string section;
    for (std::size_t r = 0; r < rows.front().size(); ++r) {
        const ReportRow& head = rows.front()[r];
        if (head.section == "theta" || head.section == "sigma") continue;
        if (head.section != section) {
            section = head.section;
            out << section << '\n';
        }
        out << std::left << std::setw(kLabel) << display_label(head.name);
        for (const auto& pr : rows) {
            const ReportRow* match = nullptr;
            for (const auto& cand : pr) {
                if (cand.section == head.section && cand.name == head.name) match = &cand;
            }
            out << std::right << std::setw(kCol) << (match ? fmt_fixed(match->estimate, 3) : "") << std::left
                << std::setw(5) << (match ? " " + std::string(to_string(match->stars)) : "");
        }
        out << '\n' << std::left << std::setw(kLabel) << "";
        for (const auto& pr : rows) {
            const ReportRow* match = nullptr;
            for (const auto& cand : pr) {
                if (cand.section == head.section && cand.name == head.name) match = &cand;
            }
            const std::string se = match && std::isfinite(match->se) ? "(" + fmt_fixed(match->se, 3) + ")" : "";
            out << std::right << std::setw(kCol) << se << std::setw(5) << "";
        }
        out << '\n';
    }
    auto stat_row = [&](const char* label, auto getter, int digits) {
        out << std::left << std::setw(kLabel) << label;
        for (const auto& pf : fits) out << std::right << std::setw(kCol) << fmt_fixed(getter(pf), digits) << std::setw(5) << "";
        out << '\n';
    };
    stat_row("Number of Observation", [](const PeriodFit& pf) { return static_cast<double>(pf.data.n()); }, 0);
    stat_row("AIC", [](const PeriodFit& pf) { return pf.indices.aic; }, 1);
    stat_row("BIC", [](const PeriodFit& pf) { return pf.indices.bic; }, 1);
    stat_row("CFI", [](const PeriodFit& pf) { return pf.indices.cfi; }, 3);
    stat_row("RMSEA", [](const PeriodFit& pf) { return pf.indices.rmsea; }, 3);
    stat_row("SRMR", [](const PeriodFit& pf) { return pf.indices.srmr; }, 3);
    out << "Standard errors in parentheses; significance level: ***p<0.01, **p<0.05, *p<0.1\n";
}

void write_index_table(std::ostream& out, const IndexTable& table) {
    csv::write_row(out, {"unit", "period", "raw_score", "index", "rank"});
    for (std::size_t i = 0; i < table.unit_labels.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        csv::write_row(out, {table.unit_labels[i], table.period_label, format_number(table.raw_score(ii)),
                             format_number(table.scaled_index(ii)), std::to_string(table.rank[i])});
    }
}

void write_comparison(std::ostream& out, const PeriodComparison& cmp) {
    csv::write_row(out, {"unit", "index_a", "index_b", "rank_a", "rank_b"});
    for (const auto& r : cmp.rows) {
        csv::write_row(out, {r.unit, format_number(r.index_a), format_number(r.index_b), std::to_string(r.rank_a),
                             std::to_string(r.rank_b)});
    }
}

void write_comparison_summary(std::ostream& out, const PeriodComparison& cmp) {
    csv::write_row(out, {"period_a", "period_b", "n", "pearson", "spearman"});
    csv::write_row(out, {cmp.period_a, cmp.period_b, std::to_string(cmp.rows.size()), format_number(cmp.pearson),
                         format_number(cmp.spearman)});
}

void write_curve(std::ostream& out, const CurveEstimate& curve) {
    csv::write_row(out, {"grp", "fitted", "lo", "hi"});
    for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
        csv::write_row(out, {format_number(curve.grid(i)), format_number(curve.fitted(i)), format_number(curve.ci_lower(i)),
                             format_number(curve.ci_upper(i))});
    }
}

void write_trend(std::ostream& out, const Eigen::VectorXd& grid, const Eigen::VectorXd& trend) {
    csv::write_row(out, {"grp", "trend"});
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        csv::write_row(out, {format_number(grid(i)), format_number(trend(i))});
    }
}

void write_dataset(std::ostream& out, const Dataset& data, const ModelSpec& spec) {
    std::vector<std::string> header{"unit"};
    header.insert(header.end(), spec.indicator_names.begin(), spec.indicator_names.end());
    header.insert(header.end(), spec.cause_names.begin(), spec.cause_names.end());
    csv::write_row(out, header);
    for (Eigen::Index r = 0; r < data.y.rows(); ++r) {
        std::vector<std::string> row{data.unit_labels.empty() ? std::to_string(r + 1)
                                                               : data.unit_labels[static_cast<std::size_t>(r)]};
        for (Eigen::Index c = 0; c < data.y.cols(); ++c) row.push_back(format_number(data.y(r, c)));
        for (Eigen::Index c = 0; c < data.x.cols(); ++c) row.push_back(format_number(data.x(r, c)));
        csv::write_row(out, row);
    }
}

void write_recovery(std::ostream& out, const RecoveryReport& report) {
    csv::write_row(out, {"parameter", "truth", "mean_estimate", "bias", "empirical_sd", "mean_se_naive", "mean_se_mlm",
                         "mean_se_mlr", "coverage_naive", "coverage_mlm", "coverage_mlr"});
    for (const auto& p : report.parameters) {
        csv::write_row(out, {p.name, format_number(p.truth), format_number(p.mean_estimate), format_number(p.bias),
                             format_number(p.empirical_sd), format_number(p.mean_se_naive), format_number(p.mean_se_mlm),
                             format_number(p.mean_se_mlr), format_number(p.coverage_naive), format_number(p.coverage_mlm),
                             format_number(p.coverage_mlr)});
    }
}

void write_recovery_summary(std::ostream& out, const RecoveryReport& report) {
    out << "replications: " << report.replications << " (successful " << report.successful << ")\n";
    double max_bias = 0.0;
    for (const auto& p : report.parameters) max_bias = std::max(max_bias, std::abs(p.bias));
    out << "max |bias|: " << format_number(max_bias) << '\n';
    for (SeMethod m : {SeMethod::naive, SeMethod::mlm, SeMethod::mlr}) {
        double mean_cov = 0.0;
        for (const auto& p : report.parameters) {
            mean_cov += m == SeMethod::naive ? p.coverage_naive : m == SeMethod::mlm ? p.coverage_mlm : p.coverage_mlr;
        }
        if (!report.parameters.empty()) mean_cov /= static_cast<double>(report.parameters.size());
        out << to_string(m) << " coverage: mean " << format_number(mean_cov) << ", mean |coverage - 0.95| "
            << format_number(report.mean_coverage_error(m)) << '\n';
    }
    for (const auto& f : report.failures) out << "failure: " << f << '\n';
}

}  // namespace mimic
