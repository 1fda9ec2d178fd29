#include "mimic/ingest.hpp"

#include "mimic/csv.hpp"
#include "mimic/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace mimic {

namespace {

bool parse_double(const std::string& text, double& out) {
    std::string s = text;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
}

}  // namespace

std::vector<std::string> raw_table_header() {
    std::vector<std::string> h{"region", "period"};
    for (const char* q : kQueryColumns) h.emplace_back(q);
    h.emplace_back("total");
    for (const char* c : kRawCauseColumns) h.emplace_back(c);
    return h;
}

std::vector<std::string> RawQueryTable::periods() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (std::find(out.begin(), out.end(), r.period) == out.end()) out.push_back(r.period);
    }
    return out;
}

std::vector<RawRow> RawQueryTable::rows_for(const std::string& period) const {
    std::vector<RawRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [&](const RawRow& r) { return r.period == period; });
    return out;
}

IngestResult read_raw_table(std::istream& in) {
    const auto records = csv::read(in);
    if (records.empty()) throw SchemaError("input table is empty; a header row is required");
    const auto header = raw_table_header();
    std::vector<std::string> got;
    for (const auto& f : records.front().fields) got.push_back(trim(f));
    if (got != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw SchemaError("input header must be: " + expected);
    }

    IngestResult result;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        RawRow row;
        row.line = rec.line;
        const std::size_t before = result.issues.size();
        auto issue = [&](std::string msg) { result.issues.push_back({rec.line, row.region, std::move(msg)}); };

        if (rec.fields.size() != header.size()) {
            row.region = rec.fields.empty() ? "" : trim(rec.fields[0]);
            issue("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(rec.fields.size()));
            continue;
        }
        row.region = trim(rec.fields[0]);
        row.period = trim(rec.fields[1]);
        if (row.region.empty()) issue("empty region label");
        if (row.period.empty()) issue("empty period label");

        double sum = 0.0;
        for (std::size_t i = 0; i < kQueryColumns.size(); ++i) {
            const std::string& cell = rec.fields[2 + i];
            if (!parse_double(cell, row.counts[i])) {
                issue(std::string("column ") + kQueryColumns[i] + " is not a number: '" + cell + "'");
            } else if (row.counts[i] < 0.0) {
                issue(std::string("column ") + kQueryColumns[i] + " is negative");
            }
            sum += row.counts[i];
        }
        if (!parse_double(rec.fields[7], row.total)) {
            issue("column total is not a number: '" + rec.fields[7] + "'");
        } else if (row.total < 0.0) {
            issue("column total is negative");
        } else if (row.total < sum) {
            issue("total is smaller than the sum of category counts");
        }
        for (std::size_t i = 0; i < kRawCauseColumns.size(); ++i) {
            const std::string& cell = rec.fields[8 + i];
            if (!parse_double(cell, row.causes[i])) {
                issue(std::string("column ") + kRawCauseColumns[i] + " is not a number: '" + cell + "'");
            }
        }
        if (result.issues.size() == before) result.table.rows.push_back(std::move(row));
    }
    return result;
}

IngestResult read_raw_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open input table " + path.string());
    return read_raw_table(in);
}

RawQueryTable aggregate_periods(const RawQueryTable& table) {
    RawQueryTable out;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    for (const auto& row : table.rows) {
        const auto key = std::make_pair(row.period, row.region);
        const auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, out.rows.size());
            out.rows.push_back(row);
            continue;
        }
        RawRow& acc = out.rows[it->second];
        for (std::size_t i = 0; i < acc.causes.size(); ++i) {
            const double a = acc.causes[i];
            const double b = row.causes[i];
            if (std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)})) {
                throw SchemaError("region '" + row.region + "' period '" + row.period + "': column " +
                                  kRawCauseColumns[i] + " differs between lines " + std::to_string(acc.line) +
                                  " and " + std::to_string(row.line));
            }
        }
        for (std::size_t i = 0; i < acc.counts.size(); ++i) acc.counts[i] += row.counts[i];
        acc.total += row.total;
    }
    return out;
}

ShareMatrix compute_indicator_shares(const RawQueryTable& table, const std::string& period) {
    const auto rows = table.rows_for(period);
    if (rows.empty()) throw SchemaError("no rows for period '" + period + "'");
    std::string zero;
    for (const auto& r : rows) {
        if (!(r.total > 0.0)) zero += (zero.empty() ? "" : ", ") + r.region;
    }
    if (!zero.empty()) throw SchemaError("period '" + period + "': zero total query count for " + zero);

    ShareMatrix out;
    out.shares.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kQueryColumns.size()));
    for (std::size_t n = 0; n < rows.size(); ++n) {
        out.regions.push_back(rows[n].region);
        for (std::size_t i = 0; i < kQueryColumns.size(); ++i) {
            out.shares(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = rows[n].counts[i] / rows[n].total;
        }
    }
    return out;
}

std::pair<Eigen::MatrixXd, ColumnScaling> standardize_columns(const Eigen::MatrixXd& m,
                                                              const std::vector<std::string>& names) {
    const auto n = m.rows();
    if (n < 2) throw SchemaError("need at least two rows to standardize");
    ColumnScaling scaling;
    Eigen::MatrixXd out(n, m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double mean = m.col(c).mean();
        const Eigen::ArrayXd centered = m.col(c).array() - mean;
        const double sd = std::sqrt(centered.square().sum() / static_cast<double>(n - 1));
        if (!(sd > 1e-300) || !std::isfinite(sd) ||
            sd <= 1e-12 * std::max(1.0, m.col(c).cwiseAbs().maxCoeff())) {
            const std::string name = static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                                  : "#" + std::to_string(c + 1);
            throw SchemaError("column " + name + " is constant and cannot be standardized");
        }
        out.col(c) = (centered / sd).matrix();
        // One correction pass removes the residual rounding in the mean.
        out.col(c).array() -= out.col(c).mean();
        scaling.mean.push_back(mean);
        scaling.sd.push_back(sd);
    }
    return {std::move(out), std::move(scaling)};
}

ModelVariant parse_model_variant(std::string_view text) {
    if (text == "A" || text == "a") return ModelVariant::A;
    if (text == "B" || text == "b") return ModelVariant::B;
    throw SchemaError("model variant must be A or B, got '" + std::string(text) + "'");
}

std::vector<std::string> variant_causes(ModelVariant variant) {
    if (variant == ModelVariant::A) {
        return {"grp_pc", "grp_pc2", "grp_pc3", "mining", "manufacturing", "emissions_pc", "pop_density", "age65",
                "tertiary"};
    }
    return {"grp_pc", "grp_pc2", "grp_pc3", "manufacturing", "emissions_pc", "pop_density"};
}

Eigen::VectorXd cause_column(const std::vector<RawRow>& rows, const std::string& name) {
    int power = 1;
    std::string base = name;
    if (name == "grp_pc2" || name == "grp_pc3") {
        power = name.back() - '0';
        base = "grp_pc";
    }
    const auto it = std::find_if(kRawCauseColumns.begin(), kRawCauseColumns.end(),
                                 [&](const char* c) { return base == c; });
    if (it == kRawCauseColumns.end()) throw SchemaError("unknown cause '" + name + "'");
    const auto col = static_cast<std::size_t>(it - kRawCauseColumns.begin());
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t n = 0; n < rows.size(); ++n) v(static_cast<Eigen::Index>(n)) = std::pow(rows[n].causes[col], power);
    return v;
}

Dataset standardize_dataset(const RawQueryTable& table, const std::string& period,
                            const std::vector<std::string>& causes) {
    const ShareMatrix shares = compute_indicator_shares(table, period);
    const auto rows = table.rows_for(period);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(causes.size()));
    for (std::size_t j = 0; j < causes.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = cause_column(rows, causes[j]);

    std::vector<std::string> ynames(kIndicatorNames.begin(), kIndicatorNames.end());
    Dataset d;
    d.unit_labels = shares.regions;
    d.period_label = period;
    auto [y, ys] = standardize_columns(shares.shares, ynames);
    auto [xs, xsc] = standardize_columns(x, causes);
    d.y = std::move(y);
    d.x = std::move(xs);
    d.y_scaling = std::move(ys);
    d.x_scaling = std::move(xsc);
    return d;
}

ModelSpec spec_for_causes(const std::vector<std::string>& causes, std::size_t fixed_loading) {
    ModelSpec spec;
    spec.indicator_names.assign(kIndicatorNames.begin(), kIndicatorNames.end());
    spec.cause_names = causes;
    spec.fixed_loading = fixed_loading;
    spec.validate();
    return spec;
}

void write_raw_table(std::ostream& out, const RawQueryTable& table) {
    auto exact = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    csv::write_row(out, raw_table_header());
    for (const auto& r : table.rows) {
        std::vector<std::string> f{r.region, r.period};
        for (double c : r.counts) f.push_back(exact(c));
        f.push_back(exact(r.total));
        for (double c : r.causes) f.push_back(exact(c));
        csv::write_row(out, f);
    }
}

}  // namespace mimic
