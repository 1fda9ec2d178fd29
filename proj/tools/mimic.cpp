// mimic: command-line front end for the MIMIC index pipeline.
#include <CLI11.hpp>

#include "mimic/config.hpp"
#include "mimic/errors.hpp"
#include "mimic/pipeline.hpp"

#include <iostream>

namespace {

enum Exit : int { ok = 0, other = 1, schema = 2, convergence = 3, singular = 4 };

struct Options {
    std::string config;
    std::string out = "out";
    bool quiet = false;
};

void add_stage(CLI::App& app, const std::string& name, const std::string& help, Options& opts) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opts.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opts.out, "output directory")->capture_default_str();
    sub->add_flag("-q,--quiet", opts.quiet, "no progress lines");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIMIC latent index estimation"};
    app.require_subcommand(1);
    Options opts;
    add_stage(app, "ingest", "validate the raw table and write shares and standardized data", opts);
    add_stage(app, "fit", "fit each period and write the estimates report", opts);
    add_stage(app, "score", "write the x100 index and ranking per period", opts);
    add_stage(app, "compare", "compare two periods' indices and ranks", opts);
    add_stage(app, "ekc", "loess and cubic curves of the index against income", opts);
    add_stage(app, "simulate", "draw a dataset from known parameters", opts);
    add_stage(app, "recover", "Monte Carlo parameter recovery study", opts);
    add_stage(app, "run", "fit, score, compare and ekc in one pass", opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Exit::ok : Exit::schema;
    }

    const std::string stage_name = app.get_subcommands().front()->get_name();
    try {
        const mimic::PipelineConfig config = mimic::load_config(opts.config);
        const auto files =
            mimic::run_stage(mimic::parse_stage(stage_name), config, opts.out, opts.quiet ? nullptr : &std::cerr);
        for (const auto& f : files) std::cout << f.string() << '\n';
        return Exit::ok;
    } catch (const mimic::SchemaError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return Exit::schema;
    } catch (const mimic::ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return Exit::convergence;
    } catch (const mimic::SingularityError& e) {
        std::cerr << "singular model: " << e.what() << '\n';
        return Exit::singular;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::other;
    }
}
