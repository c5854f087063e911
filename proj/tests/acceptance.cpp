// Acceptance run: one PASS/FAIL line per criterion, exit code 0 iff all pass.
#include "sdestab/bounds.hpp"
#include "sdestab/experiment.hpp"
#include "sdestab/modelzoo.hpp"
#include "sdestab/operators.hpp"
#include "sdestab/simulate.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace sdestab;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kFdRelTol = 1e-5;
constexpr double kFdStep = 1e-4;
constexpr double kFdSeconds = 5.0;
constexpr int kFdPoints = 100;
constexpr double kIdentityFactor = 1.3;
constexpr double kLinearResidual = 1e-3;
constexpr std::size_t kIdentityPaths = 100;
constexpr std::size_t kDominationPairs = 10000;
constexpr double kDominationSeconds = 300.0;
constexpr std::size_t kExpMomentPaths = 10000;
constexpr std::size_t kLinfPairs = 1000;
constexpr double kLinfDt = 1e-4;
constexpr double kMonotonicityTol = 1e-6;
constexpr double kBlowupTime = 1.2;
constexpr double kBlowupThreshold = 1e6;
constexpr double kBlowupSeconds = 1.0;
constexpr double kBlowupDt = 1e-4;
constexpr std::size_t kBurgersPaths = 1000;
constexpr double kEnergyTol = 1e-8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Runs a parsed config and checks that it produced rows and that they all pass.
Outcome run_all_pass(const ExperimentConfig& cfg, std::vector<ResultRow>* rows = nullptr) {
    const RunResult r = run_experiment(cfg);
    if (rows) *rows = r.rows;
    std::size_t ok = 0;
    std::string first_fail;
    for (const auto& row : r.rows) {
        if (row.pass) {
            ++ok;
        } else if (first_fail.empty()) {
            first_fail = " first fail: " + row.model + " " + row.experiment + " empirical " +
                         format_double(row.empirical) + " bound " + format_double(row.bound);
        }
    }
    Outcome o;
    o.pass = !r.rows.empty() && ok == r.rows.size();
    o.detail = cfg.model + " " + std::to_string(ok) + "/" + std::to_string(r.rows.size()) + first_fail;
    return o;
}

// Generator of the pair process driven by one Brownian motion, as an SDE on R^{2d}.
SdeModel stacked(const SdeModel& m) {
    const int d = m.dim_state;
    SdeModel s;
    s.dim_state = 2 * d;
    s.dim_noise = m.dim_noise;
    s.drift = [m, d](const Vec& z) {
        Vec out(2 * d);
        out << m.drift(z.head(d)), m.drift(z.tail(d));
        return out;
    };
    s.diffusion = [m, d](const Vec& z) {
        Mat out(2 * d, m.dim_noise);
        out << m.diffusion(z.head(d)), m.diffusion(z.tail(d));
        return out;
    };
    return s;
}

Outcome criterion_1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    std::string where;
    auto track = [&](double an, double fd, const std::string& what) {
        const double err = std::abs(an - fd) / std::max(1.0, std::abs(an));
        if (!(err <= worst)) {
            worst = err;
            where = what;
        }
    };
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        const int d = e.model.dim_state;
        const SdeModel pair = stacked(e.model);
        for (int i = 0; i < kFdPoints; ++i) {
            const Vec x = testutil::uniform_in(e.box, rng);
            const Vec y = testutil::uniform_in(e.box, rng);
            for (const auto& L : e.lyapunov) {
                track(apply_operators(e.model, L.field, x).gen,
                      testutil::fd_generator(e.model, L.field.value, x, kFdStep), zoo_name(n) + " " + L.field.name);
            }
            const auto Vz = [&](const Vec& z) { return e.distance.value(z.head(d), z.tail(d)); };
            Vec z(2 * d);
            z << x, y;
            track(apply_extended(e.model, e.distance, x, y).extgen, testutil::fd_generator(pair, Vz, z, kFdStep),
                  zoo_name(n) + " extended " + e.distance.name);
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst < kFdRelTol && secs < kFdSeconds;
    o.detail = "worst relative error " + format_double(worst) + " (" + where + "), " + format_double(secs) + " s";
    return o;
}

Outcome criterion_2() {
    ExperimentConfig g;
    g.kind = ExperimentKind::identity_residual;
    g.model = "gbm";
    g.mc.n_paths = kIdentityPaths;
    g.mc.seed = 2;
    std::vector<ResultRow> rows;
    const Outcome a = run_all_pass(g, &rows);
    double factor = std::nan("");
    for (const auto& r : rows) {
        if (r.experiment == "identity_rate") factor = r.empirical;
    }
    ExperimentConfig l = g;
    l.model = "linear";
    l.dt_list = {1e-4};
    std::vector<ResultRow> lrows;
    const Outcome b = run_all_pass(l, &lrows);
    const bool rate_ok = factor >= kIdentityFactor;
    const bool lin_ok = lrows.size() == 1 && lrows[0].empirical < kLinearResidual;
    Outcome o;
    o.pass = a.pass && b.pass && rate_ok && lin_ok;
    o.detail = "gbm factor per halving " + format_double(factor) +
               " (fitted over dt 1e-2..1e-2/1024), linear residual " +
               (lrows.empty() ? std::string("none") : format_double(lrows[0].empirical));
    return o;
}

Outcome criterion_3() {
    const auto t0 = Clock::now();
    const std::vector<std::string> models = {"van_der_pol", "duffing_vdp", "lorenz",      "langevin",
                                             "brownian_dynamics", "sir",  "psychology", "brusselator"};
    Outcome o{true, ""};
    for (const auto& m : models) {
        ExperimentConfig c;
        c.kind = ExperimentKind::lipschitz;
        c.model = m;
        c.mc.n_paths = kDominationPairs;
        c.mc.seed = 3;
        c.slack = 0.0;
        std::vector<ResultRow> rows;
        const Outcome r = run_all_pass(c, &rows);
        bool horizon_ok = true;
        for (const auto& row : rows) horizon_ok = horizon_ok && row.T <= 0.5;
        o.pass = o.pass && r.pass && horizon_ok;
        o.detail += r.detail + "; ";
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs < kDominationSeconds;
    o.detail += format_double(secs) + " s";
    return o;
}

Outcome criterion_4() {
    Outcome o{true, ""};
    for (const auto& [m, params] :
         std::vector<std::pair<std::string, Params>>{{"lorenz", {{"rho", 0.05}}}, {"sir", {}}}) {
        ExperimentConfig c;
        c.kind = ExperimentKind::exp_moment;
        c.model = m;
        c.params = params;
        c.mc.n_paths = kExpMomentPaths;
        c.mc.seed = 4;
        const Outcome r = run_all_pass(c);
        o.pass = o.pass && r.pass;
        o.detail += r.detail + "; ";
    }
    return o;
}

Outcome criterion_5() {
    Outcome o{true, ""};
    const Params cir = {{"b", 0.5}, {"delta", 0.3}, {"beta", 0.5}, {"gamma", -1.0}, {"kappa", 0.0}, {"alpha", 0.0}};
    const Params wf = {{"beta", 0.4}, {"rho0", 0.3}, {"rho1", 0.3}, {"s", 1.0}};
    const std::vector<std::tuple<std::string, Params, std::string>> runs = {
        {"volatility", cir, "linf"}, {"volatility", cir, "sup_linf"}, {"wright_fisher", wf, "transformed"}};
    for (const auto& [m, params, kind] : runs) {
        ExperimentConfig c;
        c.kind = ExperimentKind::lipschitz;
        c.model = m;
        c.params = params;
        c.certificate = kind;
        c.T_list = {1.0};
        c.mc.n_paths = kLinfPairs;
        c.mc.dt = kLinfDt;
        c.mc.seed = 5;
        c.slack = 0.0;
        const Outcome r = run_all_pass(c);
        o.pass = o.pass && r.pass;
        o.detail += r.detail + " [" + kind + "]; ";
    }
    return o;
}

Outcome criterion_6() {
    const double alpha = 1.0, beta = 0.5;
    const double pstar = 1.0 + 16.0 * alpha / (9.0 * beta * beta);
    const ZooEntry e = build_model(ZooName::volatility, {{"kappa", 0.0},
                                                         {"delta", 0.0},
                                                         {"a", 2.0},
                                                         {"b", 1.5},
                                                         {"alpha", alpha},
                                                         {"beta", beta}});
    Outcome o{true, "p* = " + format_double(pstar) + ";"};
    for (const double f : {0.25, 0.5, 0.9, 0.999, 1.0, 1.001, 1.1, 2.0}) {
        BoundQuery q = default_query(e);
        q.r = Exponent(pstar * f);
        q.q1 = Exponent(pstar * f);
        q.p = Exponent::infinity();
        const CertResult c = certificate(e, q, "global");
        const bool finite = c.ok() && std::isfinite(c.cert->value);
        const bool want = f <= 1.0;
        if (finite != want) {
            o.pass = false;
            o.detail += " wrong at p = " + format_double(pstar * f) + (c.ok() ? "" : " (" + c.reason + ")");
        }
    }
    if (o.pass) o.detail += " finite for p <= p*, no certificate above";
    return o;
}

Outcome criterion_7() {
    ExperimentConfig c;
    c.kind = ExperimentKind::monotonicity;
    c.model = "all";
    c.p_list = {1.0, 1.5, 2.0, 4.0};
    c.mc.seed = 7;
    std::vector<ResultRow> rows;
    const Outcome a = run_all_pass(c, &rows);
    bool tol_ok = true;
    for (const auto& r : rows) tol_ok = tol_ok && r.empirical <= r.bound + kMonotonicityTol;
    ExperimentConfig ce = c;
    ce.model = "counterexample";
    std::vector<ResultRow> crow;
    const Outcome b = run_all_pass(ce, &crow);
    double der = std::nan(""), dif = std::nan("");
    for (const auto& r : crow) {
        if (r.experiment == "counterexample_derivative") der = r.empirical;
        if (r.experiment == "counterexample_difference") dif = r.empirical;
    }
    const bool ce_ok = std::abs(der) <= kMonotonicityTol && std::abs(dif - 1.0) <= kMonotonicityTol;
    Outcome o;
    o.pass = a.pass && b.pass && tol_ok && ce_ok;
    o.detail = "zoo " + a.detail + "; counterexample derivative " + format_double(der) + ", difference " +
               format_double(dif);
    return o;
}

Outcome criterion_8() {
    const auto t0 = Clock::now();
    const BlowupResult b = rode_blowup(testutil::vec({2.0, 0.0}), kBlowupDt, kBlowupThreshold);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = b.blew_up && b.final_norm > kBlowupThreshold && b.tau <= kBlowupTime && secs < kBlowupSeconds;
    o.detail = std::string(b.blew_up ? "blew up" : "no blow-up") + " at tau = " + format_double(b.tau) +
               " (required <= " + format_double(kBlowupTime) + "), final norm " + format_double(b.final_norm) + ", " +
               format_double(secs) + " s";
    return o;
}

Outcome criterion_9() {
    ExperimentConfig c;
    c.kind = ExperimentKind::burgers;
    c.model = "burgers";
    c.params = {{"c", 1.0}, {"eta", 0.1}, {"lip", 0.0}};
    c.modes = {4, 8, 16};
    c.T_list = {0.1};
    c.r = Exponent(3.0);
    c.p = Exponent(6.0);
    c.mc.n_paths = kBurgersPaths;
    c.mc.dt = 1e-4;
    c.mc.seed = 9;
    std::vector<ResultRow> rows;
    const Outcome a = run_all_pass(c, &rows);
    std::vector<double> bounds;
    bool energy_ok = true;
    int uniform_rows = 0;
    for (const auto& r : rows) {
        if (r.experiment == "burgers_uniform") {
            bounds.push_back(r.bound);
            ++uniform_rows;
        }
        if (r.experiment == "burgers_energy") energy_ok = energy_ok && r.empirical < kEnergyTol;
    }
    bool same = !bounds.empty();
    for (const double b : bounds) same = same && b == bounds.front();
    Outcome o;
    o.pass = a.pass && energy_ok && same && uniform_rows == 3;
    o.detail = a.detail + (same ? ", one certificate " + format_double(bounds.front()) : ", certificates differ");
    return o;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome criterion_10() {
    const fs::path root = fs::temp_directory_path() / "sdestab_acceptance_determinism";
    fs::remove_all(root);
    std::vector<ExperimentConfig> cfgs;
    ExperimentConfig lip;
    lip.kind = ExperimentKind::lipschitz;
    lip.model = "lorenz";
    lip.mc.n_paths = 500;
    lip.mc.seed = 10;
    cfgs.push_back(lip);
    ExperimentConfig vol = lip;
    vol.model = "volatility";
    vol.certificate = "linf";
    vol.T_list = {0.5};
    cfgs.push_back(vol);
    ExperimentConfig em;
    em.kind = ExperimentKind::exp_moment;
    em.model = "sir";
    em.mc.n_paths = 500;
    cfgs.push_back(em);
    Outcome o{true, ""};
    int idx = 0;
    for (ExperimentConfig c : cfgs) {
        std::vector<std::string> csv;
        for (const int threads : {1, 1, 8}) {
            c.mc.threads = threads;
            c.svg = false;
            c.out_dir = (root / ("run" + std::to_string(idx++))).string();
            csv.push_back(slurp(write_outputs(c, run_experiment(c))));
        }
        const bool same = !csv[0].empty() && csv[0] == csv[1] && csv[0] == csv[2];
        o.pass = o.pass && same;
        o.detail += c.model + (same ? " identical; " : " DIFFERS; ");
    }
    fs::remove_all(root);
    o.detail += "threads 1, 1, 8";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"operator consistency", criterion_1},  {"pathwise identity", criterion_2},
        {"bound domination", criterion_3},      {"exponential moments", criterion_4},
        {"L-infinity bounds", criterion_5},     {"global-Lipschitz threshold", criterion_6},
        {"monotonicity", criterion_7},          {"blow-up", criterion_8},
        {"burgers", criterion_9},               {"determinism", criterion_10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %zu %s: %s (%s) [%.1f s]\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
