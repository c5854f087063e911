#pragma once

#include "sdestab/core.hpp"
#include "sdestab/modelzoo.hpp"

#include <string>
#include <vector>

namespace sdestab {

enum class ExperimentKind { lipschitz, exp_moment, lyapunov_check, identity_residual, blowup, monotonicity, burgers };

std::string experiment_name(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& s);

// All keys have defaults; see README for the file format.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::lipschitz;

    // [model]
    std::string model = "lorenz";  // zoo name, or "gbm" / "linear" / "burgers" / "counterexample"
    std::string variant;
    Params params;

    // [query]
    std::vector<double> T_list;  // empty: the entry's default horizon
    Exponent r{2.0};
    Exponent p = Exponent::infinity();
    double theta = 1.0;
    std::vector<double> x;  // empty: the entry's defaults
    std::vector<double> y;
    std::string certificate;     // empty: the entry's default kind
    int lyapunov_index = -1;     // -1: all entries
    double threshold = 1e6;      // blowup
    std::vector<double> p_list = {1.0, 2.0, 4.0};  // monotonicity
    std::vector<int> modes = {4, 8, 16};            // burgers
    int grid_points = 20000;     // lyapunov_check / monotonicity sample budget

    // [mc]
    McConfig mc;
    bool scheme_auto = true;     // use the entry's scheme unless [mc] scheme is set
    std::vector<double> dt_list;  // identity sweep; empty: 1e-2 halved down to about 1e-5
    double slack = 0.0;

    // [output]
    std::string out_dir = "out";
    std::string csv_name;  // empty: <experiment>.csv
    bool svg = true;
};

// Parses a TOML file; unknown sections or keys are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& toml_text, const std::string& source_name = "config");

struct ResultRow {
    std::string experiment;
    std::string model;
    double T = 0.0;
    double dt = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    Exponent r{2.0};
    Exponent p = Exponent::infinity();
    Exponent q0 = Exponent::infinity();
    Exponent q1 = Exponent::infinity();
    double theta = 0.0;
    Vec x;
    Vec y;
    double empirical = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool pass = false;
};

std::string csv_header();
std::string csv_line(const ResultRow& row);
std::string format_double(double v);

struct RunResult {
    std::vector<ResultRow> rows;
    std::vector<std::string> notes;  // human-readable diagnostics
    bool all_pass() const;
};

RunResult run_experiment(const ExperimentConfig& cfg);

// Writes the CSV (and an SVG when enabled) under cfg.out_dir, returns the CSV path.
std::string write_outputs(const ExperimentConfig& cfg, const RunResult& res);

struct ReportResult {
    std::string summary;
    std::vector<std::string> svg_files;
    int exit_code = 0;
};

// Reads result CSVs, groups by model, prints "k/n pass" per model and overall,
// and writes deterministic SVG plots into svg_dir (skipped when empty).
// Malformed rows raise std::runtime_error with "file:line: reason".
ReportResult emit_report(const std::vector<std::string>& csv_paths, const std::string& svg_dir);

std::vector<ResultRow> read_csv(const std::string& path);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Plot of series (x, y) pairs; log axes optional. Byte-identical for identical input.
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};
std::string render_svg(const std::string& title, const std::vector<SvgSeries>& series, bool log_x, bool log_y,
                       const std::string& footer);

}  // namespace sdestab
