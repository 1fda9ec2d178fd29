#include "mimic/config.hpp"

#include "mimic/errors.hpp"
#include "mimic/ingest.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mimic {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw SchemaError("unknown config key '" + where + key + "'");
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config key '") + key + "': " + e.what());
    }
}

Eigen::VectorXd vector_or_empty(const json& obj, const char* key) {
    if (!obj.contains(key)) return {};
    const auto v = get_or<std::vector<double>>(obj, key, {});
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ParameterSet default_true_parameters(std::size_t p, std::size_t k) {
    static constexpr double kLoadings[] = {1.0, 0.8, 0.9, 1.1, 0.7};
    static constexpr double kBetas[] = {0.3, -0.2, 0.25, -0.15, 0.2, 0.1};
    ParameterSet tp;
    tp.lambda.resize(static_cast<Eigen::Index>(p));
    tp.beta.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < p; ++i) tp.lambda(static_cast<Eigen::Index>(i)) = kLoadings[i % 5];
    for (std::size_t j = 0; j < k; ++j) tp.beta(static_cast<Eigen::Index>(j)) = kBetas[j % 6];
    tp.sigma = 0.5;
    const double var_eta = tp.beta.squaredNorm() + tp.sigma * tp.sigma;
    tp.theta = (1.0 - tp.lambda.array().square() * var_eta).cwiseMax(0.05).sqrt().matrix();
    return tp;
}

PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text, nullptr, true, true);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaError("config must be a JSON object");
    reject_unknown(root, {"input", "scores_input", "variant", "causes", "periods", "fixed_loading", "fit", "ranking",
                          "compare", "loess", "simulation", "seed", "description"},
                   "");

    PipelineConfig cfg;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (root.contains("input")) cfg.input = resolve(get_or<std::string>(root, "input", ""));
    if (root.contains("scores_input")) cfg.scores_input = resolve(get_or<std::string>(root, "scores_input", ""));

    cfg.variant = get_or<std::string>(root, "variant", "B");
    if (root.contains("causes")) {
        cfg.causes = get_or<std::vector<std::string>>(root, "causes", {});
        cfg.variant = "custom";
        for (const auto& c : cfg.causes) cause_column({}, c);  // rejects unknown names
        spec_for_causes(cfg.causes);                          // and duplicates or an empty list
    } else {
        cfg.causes = variant_causes(parse_model_variant(cfg.variant));
    }
    cfg.periods = get_or<std::vector<std::string>>(root, "periods", {});
    cfg.compare = get_or<std::vector<std::string>>(root, "compare", {});
    if (!cfg.compare.empty() && cfg.compare.size() != 2) throw SchemaError("'compare' must name exactly two periods");
    cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);

    if (root.contains("fixed_loading")) {
        const auto name = get_or<std::string>(root, "fixed_loading", "");
        const auto it = std::find(kIndicatorNames.begin(), kIndicatorNames.end(), name);
        if (it == kIndicatorNames.end()) throw SchemaError("fixed_loading must name an indicator, got '" + name + "'");
        cfg.fixed_loading = static_cast<std::size_t>(it - kIndicatorNames.begin());
    }

    if (root.contains("fit")) {
        const json& f = root.at("fit");
        reject_unknown(f, {"gradient_tolerance", "relative_tolerance", "max_iterations", "se_methods", "heywood_threshold"},
                       "fit.");
        cfg.fit.gradient_tolerance = get_or<double>(f, "gradient_tolerance", cfg.fit.gradient_tolerance);
        cfg.fit.relative_tolerance = get_or<double>(f, "relative_tolerance", cfg.fit.relative_tolerance);
        cfg.fit.max_iterations = get_or<int>(f, "max_iterations", cfg.fit.max_iterations);
        cfg.fit.heywood_threshold = get_or<double>(f, "heywood_threshold", cfg.fit.heywood_threshold);
        if (f.contains("se_methods")) {
            cfg.fit.se_methods.clear();
            for (const auto& m : get_or<std::vector<std::string>>(f, "se_methods", {})) {
                cfg.fit.se_methods.push_back(parse_se_method(m));
            }
        }
        if (!(cfg.fit.gradient_tolerance > 0.0) || cfg.fit.max_iterations < 1) {
            throw SchemaError("fit tolerances must be positive");
        }
    }

    if (root.contains("ranking")) {
        const json& r = root.at("ranking");
        reject_unknown(r, {"tie_break"}, "ranking.");
        const auto tb = get_or<std::string>(r, "tie_break", "label");
        if (tb == "label") cfg.tie_break = TieBreak::label;
        else if (tb == "input_order") cfg.tie_break = TieBreak::input_order;
        else throw SchemaError("ranking.tie_break must be 'label' or 'input_order'");
    }

    if (root.contains("loess")) {
        const json& l = root.at("loess");
        reject_unknown(l, {"span", "degree", "grid_points", "x_axis"}, "loess.");
        cfg.loess.span = get_or<double>(l, "span", cfg.loess.span);
        cfg.loess.degree = get_or<int>(l, "degree", cfg.loess.degree);
        cfg.loess.grid_points = get_or<int>(l, "grid_points", cfg.loess.grid_points);
        const auto axis = get_or<std::string>(l, "x_axis", "raw");
        if (axis == "raw") cfg.loess_axis = LoessAxis::raw;
        else if (axis == "standardized") cfg.loess_axis = LoessAxis::standardized;
        else throw SchemaError("loess.x_axis must be 'raw' or 'standardized'");
        if (!(cfg.loess.span > 0.0) || cfg.loess.degree < 0 || cfg.loess.degree > 3 || cfg.loess.grid_points < 2) {
            throw SchemaError("loess settings out of range");
        }
    }

    if (root.contains("simulation")) {
        const json& s = root.at("simulation");
        reject_unknown(s, {"n", "replications", "k", "causes", "lambda", "beta", "theta", "sigma", "errors", "t_df",
                           "threads", "raw_table", "raw_regions", "raw_periods"},
                       "simulation.");
        SimulationSettings& sim = cfg.simulation;
        sim.n = get_or<std::size_t>(s, "n", sim.n);
        sim.replications = get_or<std::size_t>(s, "replications", sim.replications);
        sim.causes = get_or<std::vector<std::string>>(s, "causes", {});
        sim.k = sim.causes.empty() ? get_or<std::size_t>(s, "k", sim.k) : sim.causes.size();
        sim.t_df = get_or<double>(s, "t_df", sim.t_df);
        sim.threads = get_or<unsigned>(s, "threads", sim.threads);
        sim.raw_table = get_or<bool>(s, "raw_table", sim.raw_table);
        sim.raw_regions = get_or<std::size_t>(s, "raw_regions", sim.raw_regions);
        sim.raw_periods = get_or<std::vector<std::string>>(s, "raw_periods", sim.raw_periods);
        const auto errors = get_or<std::string>(s, "errors", "normal");
        if (errors == "normal") sim.errors = ErrorDistribution::normal;
        else if (errors == "scaled_t") sim.errors = ErrorDistribution::scaled_t;
        else throw SchemaError("simulation.errors must be 'normal' or 'scaled_t'");
        sim.true_params.lambda = vector_or_empty(s, "lambda");
        sim.true_params.beta = vector_or_empty(s, "beta");
        sim.true_params.theta = vector_or_empty(s, "theta");
        sim.true_params.sigma = get_or<double>(s, "sigma", -1.0);
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

}  // namespace mimic
