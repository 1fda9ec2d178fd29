#include "mimic/pipeline.hpp"

#include "mimic/csv.hpp"
#include "mimic/diagnostics.hpp"
#include "mimic/ekc.hpp"
#include "mimic/errors.hpp"
#include "mimic/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <map>
#include <ostream>

namespace mimic {

namespace {

namespace fs = std::filesystem;

class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    template <class Writer>
    void write(const std::string& name, Writer&& writer) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw SchemaError("cannot write " + path.string());
        writer(out);
        if (!out) throw SchemaError("failed writing " + path.string());
        written_.push_back(path);
    }

    std::vector<fs::path> take() { return std::move(written_); }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

void note(std::ostream* log, const std::string& line) {
    if (log) *log << line << '\n';
}

ParameterSet complete_params(const ParameterSet& given, std::size_t p, std::size_t k) {
    ParameterSet def = default_true_parameters(p, k);
    if (given.lambda.size() == static_cast<Eigen::Index>(p)) def.lambda = given.lambda;
    if (given.beta.size() == static_cast<Eigen::Index>(k)) def.beta = given.beta;
    if (given.theta.size() == static_cast<Eigen::Index>(p)) def.theta = given.theta;
    if (given.sigma >= 0.0) def.sigma = given.sigma;
    if ((given.lambda.size() && given.lambda.size() != static_cast<Eigen::Index>(p)) ||
        (given.beta.size() && given.beta.size() != static_cast<Eigen::Index>(k)) ||
        (given.theta.size() && given.theta.size() != static_cast<Eigen::Index>(p))) {
        throw SchemaError("simulation parameter vectors do not match p = " + std::to_string(p) +
                          ", k = " + std::to_string(k));
    }
    return def;
}

SimConfig sim_config(const PipelineConfig& config) {
    const SimulationSettings& s = config.simulation;
    SimConfig sc;
    std::vector<std::string> causes = s.causes;
    if (causes.empty()) {
        for (std::size_t j = 0; j < s.k; ++j) causes.push_back("x" + std::to_string(j + 1));
    }
    sc.spec = spec_for_causes(causes, config.fixed_loading);
    sc.true_params = complete_params(s.true_params, sc.spec.p(), sc.spec.k());
    sc.n = s.n;
    sc.errors = s.errors;
    sc.t_df = s.t_df;
    sc.seed = config.seed;
    return sc;
}

std::vector<IndexTable> index_tables(const std::vector<PeriodFit>& fits, TieBreak ties) {
    std::vector<IndexTable> out;
    for (const auto& pf : fits) out.push_back(build_index_table(pf.data, pf.spec, pf.fit, ties));
    return out;
}

const IndexTable& find_table(const std::vector<IndexTable>& tables, const std::string& period) {
    for (const auto& t : tables) {
        if (t.period_label == period) return t;
    }
    throw SchemaError("no index table for period '" + period + "'");
}

PeriodComparison comparison(const PipelineConfig& config, const std::vector<IndexTable>& tables) {
    if (config.compare.size() == 2) {
        return compare_periods(find_table(tables, config.compare[0]), find_table(tables, config.compare[1]));
    }
    if (tables.size() < 2) throw SchemaError("period comparison needs at least two periods");
    return compare_periods(tables[0], tables[1]);
}

void write_ekc(Artifacts& art, const PipelineConfig& config, const RawQueryTable& table, const PeriodFit& pf,
               const IndexTable& index) {
    const auto rows = table.rows_for(pf.period);
    const auto grp_it = std::find(pf.spec.cause_names.begin(), pf.spec.cause_names.end(), "grp_pc");
    Eigen::VectorXd x;
    if (config.loess_axis == LoessAxis::raw) {
        x = cause_column(rows, "grp_pc");
    } else {
        if (grp_it == pf.spec.cause_names.end()) throw SchemaError("standardized loess axis needs the grp_pc cause");
        x = pf.data.x.col(grp_it - pf.spec.cause_names.begin());
    }
    const CurveEstimate curve = loess_fit(x, index.scaled_index, config.loess);
    const std::string tag = file_tag(pf.period);
    art.write("ekc_" + tag + ".csv", [&](std::ostream& o) { write_curve(o, curve); });

    const auto coef = grp_polynomial_coefficients(pf.spec, pf.fit.params);
    Eigen::VectorXd trend;
    if (config.loess_axis == LoessAxis::raw) {
        const auto& sc = *pf.data.x_scaling;
        std::array<double, 3> means{}, sds{};
        for (std::size_t d = 0; d < 3; ++d) {
            const auto at = std::find(pf.spec.cause_names.begin(), pf.spec.cause_names.end(), kGrpPolynomialCauses[d]) -
                            pf.spec.cause_names.begin();
            means[d] = sc.mean[static_cast<std::size_t>(at)];
            sds[d] = sc.sd[static_cast<std::size_t>(at)];
        }
        trend = cubic_trend_raw(coef, means, sds, curve.grid);
    } else {
        trend = cubic_trend(coef, curve.grid);
    }
    art.write("trend_" + tag + ".csv", [&](std::ostream& o) { write_trend(o, curve.grid, trend); });
}

}  // namespace

Stage parse_stage(std::string_view name) {
    static const std::map<std::string_view, Stage> stages{
        {"ingest", Stage::ingest},   {"fit", Stage::fit},           {"score", Stage::score},
        {"compare", Stage::compare}, {"ekc", Stage::ekc},           {"simulate", Stage::simulate},
        {"recover", Stage::recover}, {"run", Stage::all},
    };
    const auto it = stages.find(name);
    if (it == stages.end()) throw SchemaError("unknown stage '" + std::string(name) + "'");
    return it->second;
}

std::string file_tag(std::string_view label) {
    std::string out;
    for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
    return out.empty() ? "period" : out;
}

RawQueryTable load_input(const PipelineConfig& config) {
    if (config.input.empty()) throw SchemaError("config has no 'input' table");
    IngestResult ingest = read_raw_table(config.input);
    if (!ingest.issues.empty()) {
        std::string msg = std::to_string(ingest.issues.size()) + " invalid row(s) in " + config.input.string() + ":";
        for (const auto& i : ingest.issues) {
            msg += "\n  line " + std::to_string(i.line) + (i.region.empty() ? "" : " (" + i.region + ")") + ": " + i.message;
        }
        throw SchemaError(msg);
    }
    return aggregate_periods(ingest.table);
}

std::vector<std::string> selected_periods(const PipelineConfig& config, const RawQueryTable& table) {
    const auto available = table.periods();
    if (config.periods.empty()) return available;
    for (const auto& p : config.periods) {
        if (std::find(available.begin(), available.end(), p) == available.end()) {
            throw SchemaError("period '" + p + "' not present in the input");
        }
    }
    return config.periods;
}

PeriodFit fit_period(const RawQueryTable& table, const std::string& period, const PipelineConfig& config) {
    PeriodFit pf;
    pf.period = period;
    pf.variant = config.variant;
    pf.spec = spec_for_causes(config.causes, config.fixed_loading);
    pf.data = standardize_dataset(table, period, config.causes);
    pf.fit = fit_ml(pf.data, pf.spec, config.fit);
    if (!pf.fit.converged) {
        throw ConvergenceError("period '" + period + "': no convergence after " + std::to_string(pf.fit.iterations) +
                               " iterations (gradient max-norm " + csv::format_number(pf.fit.gradient_norm) + ")");
    }
    pf.indices = fit_indices(pf.data, pf.spec, pf.fit);
    pf.mardia = mardia_test(pf.data.y);
    return pf;
}

std::vector<IndexTable> read_score_tables(const std::filesystem::path& path, TieBreak ties) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scores file " + path.string());
    const auto records = csv::read(in);
    if (records.empty() || records.front().fields != std::vector<std::string>{"unit", "period", "score"}) {
        throw SchemaError("scores file header must be: unit,period,score");
    }
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<std::string>, std::vector<double>>> by_period;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r].fields;
        if (f.size() != 3) throw SchemaError("scores file line " + std::to_string(records[r].line) + ": expected 3 fields");
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(f[2], &used);
            if (used != f[2].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw SchemaError("scores file line " + std::to_string(records[r].line) + ": score is not a number");
        }
        if (!by_period.contains(f[1])) order.push_back(f[1]);
        auto& [labels, values] = by_period[f[1]];
        labels.push_back(f[0]);
        values.push_back(v);
    }
    std::vector<IndexTable> tables;
    for (const auto& period : order) {
        auto& [labels, values] = by_period[period];
        IndexTable t;
        t.period_label = period;
        t.unit_labels = labels;
        t.raw_score = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        t.scaled_index = scale_index(t.raw_score);
        tables.push_back(rank_units(std::move(t), ties));
    }
    return tables;
}

std::vector<std::filesystem::path> run_stage(Stage stage, const PipelineConfig& config,
                                             const std::filesystem::path& out_dir, std::ostream* log) {
    Artifacts art(out_dir);

    if (stage == Stage::simulate) {
        const SimConfig sc = sim_config(config);
        const SimulatedData sim = simulate(sc, 0);
        art.write("simulated_dataset.csv", [&](std::ostream& o) { write_dataset(o, sim.data, sc.spec); });
        art.write("latent_scores.csv", [&](std::ostream& o) {
            csv::write_row(o, {"unit", "eta"});
            for (Eigen::Index i = 0; i < sim.latent.size(); ++i) {
                csv::write_row(o, {sim.data.unit_labels[static_cast<std::size_t>(i)], csv::format_number(sim.latent(i))});
            }
        });
        if (config.simulation.raw_table) {
            RawTableSimConfig rc;
            rc.n_regions = config.simulation.raw_regions;
            rc.periods = config.simulation.raw_periods;
            rc.causes = config.causes;
            rc.true_params = complete_params(config.simulation.true_params, 5, config.causes.size());
            rc.seed = config.seed;
            const RawQueryTable raw = simulate_raw_table(rc);
            art.write("simulated_raw.csv", [&](std::ostream& o) { write_raw_table(o, raw); });
        }
        note(log, "simulated " + std::to_string(sc.n) + " observations");
        return art.take();
    }

    if (stage == Stage::recover) {
        const SimConfig sc = sim_config(config);
        const RecoveryReport rep = recovery_study(sc, config.simulation.replications, config.fit, config.simulation.threads);
        art.write("recovery.csv", [&](std::ostream& o) { write_recovery(o, rep); });
        art.write("recovery_summary.txt", [&](std::ostream& o) { write_recovery_summary(o, rep); });
        note(log, "recovery study: " + std::to_string(rep.successful) + "/" + std::to_string(rep.replications) +
                      " replications succeeded");
        return art.take();
    }

    // Provided scores replace fitting for the ranking stages.
    if (!config.scores_input.empty() && (stage == Stage::score || stage == Stage::compare || stage == Stage::all)) {
        const auto tables = read_score_tables(config.scores_input, config.tie_break);
        if (stage != Stage::compare) {
            for (const auto& t : tables) {
                art.write("index_" + file_tag(t.period_label) + ".csv", [&](std::ostream& o) { write_index_table(o, t); });
            }
        }
        if (stage != Stage::score && tables.size() >= 2) {
            const PeriodComparison cmp = comparison(config, tables);
            art.write("comparison.csv", [&](std::ostream& o) { write_comparison(o, cmp); });
            art.write("comparison_summary.csv", [&](std::ostream& o) { write_comparison_summary(o, cmp); });
        }
        return art.take();
    }

    const RawQueryTable table = load_input(config);
    const auto periods = selected_periods(config, table);

    if (stage == Stage::ingest) {
        for (const auto& period : periods) {
            const ShareMatrix shares = compute_indicator_shares(table, period);
            art.write("shares_" + file_tag(period) + ".csv", [&](std::ostream& o) {
                std::vector<std::string> header{"region"};
                for (const char* q : kQueryColumns) header.emplace_back(q);
                csv::write_row(o, header);
                for (std::size_t n = 0; n < shares.regions.size(); ++n) {
                    std::vector<std::string> row{shares.regions[n]};
                    for (Eigen::Index c = 0; c < shares.shares.cols(); ++c) {
                        row.push_back(csv::format_number(shares.shares(static_cast<Eigen::Index>(n), c)));
                    }
                    csv::write_row(o, row);
                }
            });
            const Dataset d = standardize_dataset(table, period, config.causes);
            const ModelSpec spec = spec_for_causes(config.causes, config.fixed_loading);
            art.write("dataset_" + file_tag(period) + ".csv", [&](std::ostream& o) { write_dataset(o, d, spec); });
        }
        return art.take();
    }

    // Periods are independent; fit them concurrently and collect in order.
    std::vector<std::future<PeriodFit>> pending;
    for (const auto& period : periods) {
        pending.push_back(std::async(std::launch::async, [&table, &config, period] {
            return fit_period(table, period, config);
        }));
    }
    std::vector<PeriodFit> fits;
    for (auto& f : pending) {
        fits.push_back(f.get());
        const std::string& period = fits.back().period;
        note(log, "period " + period + ": loglik " + csv::format_number(fits.back().fit.loglik) + " after " +
                      std::to_string(fits.back().fit.iterations) + " iterations");
    }

    if (stage == Stage::fit || stage == Stage::all) {
        art.write("fit_report.csv", [&](std::ostream& o) { write_fit_report_csv(o, fits); });
        art.write("fit_report.json", [&](std::ostream& o) { o << fit_report_json(fits); });
        art.write("fit_report.txt", [&](std::ostream& o) { write_fit_report_text(o, fits); });
    }
    if (stage == Stage::fit) return art.take();

    const auto tables = index_tables(fits, config.tie_break);
    if (stage == Stage::score || stage == Stage::all) {
        for (const auto& t : tables) {
            art.write("index_" + file_tag(t.period_label) + ".csv", [&](std::ostream& o) { write_index_table(o, t); });
        }
    }
    if ((stage == Stage::compare || stage == Stage::all) && tables.size() >= 2) {
        const PeriodComparison cmp = comparison(config, tables);
        art.write("comparison.csv", [&](std::ostream& o) { write_comparison(o, cmp); });
        art.write("comparison_summary.csv", [&](std::ostream& o) { write_comparison_summary(o, cmp); });
    } else if (stage == Stage::compare) {
        throw SchemaError("period comparison needs at least two periods");
    }
    if (stage == Stage::ekc || stage == Stage::all) {
        for (std::size_t i = 0; i < fits.size(); ++i) write_ekc(art, config, table, fits[i], tables[i]);
    }
    return art.take();
}

std::vector<std::filesystem::path> run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir,
                                                std::ostream* log) {
    return run_stage(Stage::all, config, out_dir, log);
}

}  // namespace mimic
