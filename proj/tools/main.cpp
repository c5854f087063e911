#include "sdestab/experiment.hpp"
#include "sdestab/simulate.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace sdestab;

namespace {

struct Overrides {
    std::string config;
    std::string model;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<double> dt;
    std::optional<std::string> out;
    std::optional<double> slack;
    std::optional<int> threads;
};

void add_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "TOML experiment config")->check(CLI::ExistingFile);
    sub->add_option("--model", o.model, "model name, overrides [model] name");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--paths", o.paths, "number of paths / coupled pairs");
    sub->add_option("--dt", o.dt, "time step");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--slack", o.slack, "relative slack for verdicts");
    sub->add_option("--threads", o.threads, "worker threads (0: hardware)");
}

int run(ExperimentKind kind, const Overrides& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.config.empty()) {
        cfg.kind = kind;
        if (kind == ExperimentKind::identity_residual) cfg.model = "gbm";
        if (kind == ExperimentKind::monotonicity) cfg.model = "all";
        if (kind == ExperimentKind::burgers) {
            cfg.model = "burgers";
            cfg.r = Exponent(3.0);
            cfg.p = Exponent(6.0);
            cfg.mc.dt = 1e-4;
        }
    } else if (cfg.kind != kind) {
        std::cerr << o.config << ": experiment '" << experiment_name(cfg.kind) << "' does not match subcommand '"
                  << experiment_name(kind) << "'\n";
        return 2;
    }
    if (!o.model.empty()) cfg.model = o.model;
    if (o.seed) cfg.mc.seed = *o.seed;
    if (o.paths) cfg.mc.n_paths = *o.paths;
    if (o.dt) cfg.mc.dt = *o.dt;
    if (o.out) cfg.out_dir = *o.out;
    if (o.slack) cfg.slack = *o.slack;
    if (o.threads) cfg.mc.threads = *o.threads;

    const RunResult res = run_experiment(cfg);
    const std::string path = write_outputs(cfg, res);
    for (const auto& n : res.notes) std::cout << n << "\n";
    std::size_t passed = 0;
    for (const auto& r : res.rows) passed += r.pass ? 1 : 0;
    std::cout << passed << "/" << res.rows.size() << " pass, wrote " << path << "\n";
    return res.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strong stability checks for nonlinear SDEs"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, ExperimentKind>> subs = {
        {"check-lyapunov", ExperimentKind::lyapunov_check},
        {"lipschitz", ExperimentKind::lipschitz},
        {"exp-moment", ExperimentKind::exp_moment},
        {"identity", ExperimentKind::identity_residual},
        {"blowup", ExperimentKind::blowup},
        {"monotonicity", ExperimentKind::monotonicity},
        {"burgers", ExperimentKind::burgers},
    };
    Overrides o;
    std::optional<ExperimentKind> chosen;
    for (const auto& [name, kind] : subs) {
        CLI::App* sub = app.add_subcommand(name, "run the " + experiment_name(kind) + " experiment");
        add_flags(sub, o);
        sub->callback([&chosen, k = kind] { chosen = k; });
    }

    std::vector<std::string> csvs;
    std::string svg_dir;
    bool report = false;
    CLI::App* rep = app.add_subcommand("report", "summarize result CSVs");
    rep->add_option("csv", csvs, "result CSV files");
    rep->add_option("--svg-dir", svg_dir, "directory for SVG plots");
    rep->callback([&report] { report = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (report) {
            const ReportResult r = emit_report(csvs, svg_dir);
            std::cout << r.summary;
            for (const auto& f : r.svg_files) std::cout << "wrote " << f << "\n";
            return r.exit_code;
        }
        return run(*chosen, o);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
}
