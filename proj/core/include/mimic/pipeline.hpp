#pragma once

#include "mimic/config.hpp"
#include "mimic/ingest.hpp"
#include "mimic/report.hpp"
#include "mimic/scoring.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mimic {

enum class Stage { ingest, fit, score, compare, ekc, simulate, recover, all };

Stage parse_stage(std::string_view name);

/// Reads the configured input, rejects it with every row issue listed, and
/// aggregates repeated region-period rows.
RawQueryTable load_input(const PipelineConfig& config);

/// Configured periods, or every period in the table in file order.
std::vector<std::string> selected_periods(const PipelineConfig& config, const RawQueryTable& table);

/// Standardize, fit, and diagnose one period. Throws ConvergenceError when
/// the optimizer does not converge.
PeriodFit fit_period(const RawQueryTable& table, const std::string& period, const PipelineConfig& config);

/// Reads a unit,period,score file into one ranked table per period (in order
/// of first appearance). Scores are standardized to the x100 index first.
std::vector<IndexTable> read_score_tables(const std::filesystem::path& path, TieBreak ties);

/// Runs one stage and writes its artifacts under `out_dir` (created if
/// needed). Returns the written paths in order. Progress lines go to `log`
/// when non-null.
std::vector<std::filesystem::path> run_stage(Stage stage, const PipelineConfig& config,
                                             const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// Full pipeline: fit report, index tables, period comparison, EKC curves.
std::vector<std::filesystem::path> run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir,
                                                std::ostream* log = nullptr);

/// Filesystem-safe form of a period label.
std::string file_tag(std::string_view label);

}  // namespace mimic
