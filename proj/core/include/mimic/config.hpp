#pragma once

#include "mimic/ekc.hpp"
#include "mimic/estimation.hpp"
#include "mimic/scoring.hpp"
#include "mimic/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mimic {

enum class LoessAxis { raw, standardized };

struct SimulationSettings {
    std::size_t n = 1000;
    std::size_t replications = 200;
    std::vector<std::string> causes;  // empty: x1..xk from `k`
    std::size_t k = 6;
    ParameterSet true_params;         // empty vectors: defaults from default_true_parameters
    ErrorDistribution errors = ErrorDistribution::normal;
    double t_df = 5.0;
    unsigned threads = 0;
    bool raw_table = false;           // simulate also writes an input-schema table
    std::size_t raw_regions = 81;
    std::vector<std::string> raw_periods{"2014", "2015"};
};

/// Everything a pipeline run needs. Paths are resolved against the config
/// file's directory.
struct PipelineConfig {
    std::filesystem::path input;                 // raw query table
    std::filesystem::path scores_input;          // optional: unit,period,score; skips fitting
    std::vector<std::string> causes;             // from `variant` or `causes`
    std::string variant = "B";
    std::vector<std::string> periods;            // empty: all, in file order
    std::size_t fixed_loading = 0;
    FitConfig fit;
    TieBreak tie_break = TieBreak::label;
    std::vector<std::string> compare;            // two periods; empty: first two
    LoessConfig loess;
    LoessAxis loess_axis = LoessAxis::raw;
    SimulationSettings simulation;
    std::uint64_t seed = 20140701;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// Unit-variance population parameters for a p x k simulation:
/// lambda = (1, .8, .9, 1.1, .7, ...), sigma = .5, alternating-sign beta,
/// theta chosen so every indicator has variance 1.
ParameterSet default_true_parameters(std::size_t p, std::size_t k);

}  // namespace mimic
