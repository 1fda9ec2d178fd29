#pragma once

#include "mimic/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mimic {

/// Query-category count columns, in indicator order.
inline constexpr std::array<const char*, 5> kQueryColumns{"q1", "q2", "q3", "q4", "q5"};

/// Indicator names used for the five query categories.
inline constexpr std::array<const char*, 5> kIndicatorNames{
    "climate_change", "endangered_environment", "politics", "science", "renewable_energy"};

/// Raw cause columns in the input file.
inline constexpr std::array<const char*, 7> kRawCauseColumns{
    "grp_pc", "mining", "manufacturing", "emissions_pc", "pop_density", "age65", "tertiary"};

/// The full input header, in order.
std::vector<std::string> raw_table_header();

struct RawRow {
    std::size_t line = 0;
    std::string region;
    std::string period;
    std::array<double, 5> counts{};
    double total = 0.0;
    std::array<double, 7> causes{};  // kRawCauseColumns order
};

/// Query counts and raw cause values, one row per region and period.
struct RawQueryTable {
    std::vector<RawRow> rows;

    /// Distinct periods in order of first appearance.
    [[nodiscard]] std::vector<std::string> periods() const;
    [[nodiscard]] std::vector<RawRow> rows_for(const std::string& period) const;
};

struct RowIssue {
    std::size_t line = 0;
    std::string region;
    std::string message;
};

struct IngestResult {
    RawQueryTable table;            // rows that passed every check
    std::vector<RowIssue> issues;   // every violation found, in line order
};

/// Parses the fixed CSV schema. A missing or wrong header throws SchemaError;
/// row-level problems are collected in `issues` and the row is dropped.
IngestResult read_raw_table(std::istream& in);
IngestResult read_raw_table(const std::filesystem::path& path);

/// Sums counts and totals over repeated (region, period) rows, e.g. the
/// months of one period. Cause values must agree across the repeats.
RawQueryTable aggregate_periods(const RawQueryTable& table);

/// y_in = count_in / total_n for one period. Regions with a zero total are
/// listed in the thrown SchemaError.
struct ShareMatrix {
    std::vector<std::string> regions;
    Eigen::MatrixXd shares;  // N x 5
};
ShareMatrix compute_indicator_shares(const RawQueryTable& table, const std::string& period);

/// Column-wise z-scores with sample SD (divisor N - 1). Constant columns
/// throw SchemaError naming the column.
std::pair<Eigen::MatrixXd, ColumnScaling> standardize_columns(const Eigen::MatrixXd& m,
                                                              const std::vector<std::string>& names = {});

/// Model (A) uses all nine causes, model (B) drops mining, age65, tertiary.
enum class ModelVariant { A, B };
ModelVariant parse_model_variant(std::string_view text);
std::vector<std::string> variant_causes(ModelVariant variant);

/// Values of a derived or raw cause for each row: grp_pc2 and grp_pc3 are
/// powers of raw grp_pc.
Eigen::VectorXd cause_column(const std::vector<RawRow>& rows, const std::string& name);

/// Shares plus causes for one period, standardized. GRP powers are formed on
/// the raw scale and each standardized on its own.
Dataset standardize_dataset(const RawQueryTable& table, const std::string& period,
                            const std::vector<std::string>& causes);

ModelSpec spec_for_causes(const std::vector<std::string>& causes, std::size_t fixed_loading = 0);

/// Writes a table in the input schema (header included).
void write_raw_table(std::ostream& out, const RawQueryTable& table);

}  // namespace mimic
