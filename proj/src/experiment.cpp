#include "sdestab/experiment.hpp"

#include "sdestab/bounds.hpp"
#include "sdestab/burgers.hpp"
#include "sdestab/estimate.hpp"
#include "sdestab/simulate.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sdestab {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKinds = {
    {ExperimentKind::lipschitz, "lipschitz"},
    {ExperimentKind::exp_moment, "exp_moment"},
    {ExperimentKind::lyapunov_check, "lyapunov_check"},
    {ExperimentKind::identity_residual, "identity_residual"},
    {ExperimentKind::blowup, "blowup"},
    {ExperimentKind::monotonicity, "monotonicity"},
    {ExperimentKind::burgers, "burgers"},
};

// Six significant digits, for human-readable notes.
std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

// Uniform in [0, 1) keyed by (seed, i), independent of the platform's <random>.
double unit(std::uint64_t seed, std::uint64_t i) {
    return static_cast<double>(mix64(seed ^ mix64(i + 0x632BE59BD9B4E019ULL)) >> 11) * 0x1.0p-53;
}

double gauss(std::uint64_t seed, std::uint64_t i) {
    const double u1 = 1.0 - unit(seed, 2 * i);
    const double u2 = unit(seed, 2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

std::string exp_str(const Exponent& e) { return e.is_inf() ? "inf" : format_double(e.value()); }

Exponent parse_exponent(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "infinity") return Exponent::infinity();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad exponent '" + s + "'");
    return Exponent(v);
}

// ---------------------------------------------------------------- config

[[noreturn]] void config_error(const std::string& src, const std::string& what) {
    throw std::invalid_argument(src + ": " + what);
}

double num(const toml::node& n, const std::string& src, const std::string& key) {
    if (auto v = n.value<double>()) return *v;
    config_error(src, "'" + key + "' must be a number");
}

std::vector<double> num_list(const toml::node& n, const std::string& src, const std::string& key) {
    const toml::array* a = n.as_array();
    if (!a) {
        return {num(n, src, key)};
    }
    std::vector<double> out;
    for (const auto& el : *a) out.push_back(num(el, src, key));
    return out;
}

Exponent exponent_of(const toml::node& n, const std::string& src, const std::string& key) {
    if (auto s = n.value<std::string>()) return parse_exponent(*s);
    const double v = num(n, src, key);
    if (std::isinf(v)) return Exponent::infinity();
    return Exponent(v);
}

std::string str(const toml::node& n, const std::string& src, const std::string& key) {
    if (auto s = n.value<std::string>()) return *s;
    config_error(src, "'" + key + "' must be a string");
}

void check_keys(const toml::table& t, const std::set<std::string>& allowed, const std::string& src,
                const std::string& section) {
    for (const auto& [k, v] : t) {
        if (!allowed.count(std::string(k.str()))) {
            config_error(src, "unknown key '" + std::string(k.str()) + "' in " + section);
        }
    }
}

// ---------------------------------------------------------------- extra models

SdeModel gbm_model(const Params& p) {
    const double a = p.count("a") ? p.at("a") : 0.5;
    const double b = p.count("b") ? p.at("b") : 0.5;
    SdeModel m;
    m.name = "gbm";
    m.dim_state = 1;
    m.dim_noise = 1;
    m.drift = [a](const Vec& x) { return Vec(a * x); };
    m.diffusion = [b](const Vec& x) { return Mat(Mat::Constant(1, 1, b * x(0))); };
    m.drift_jacobian = [a](const Vec&) { return Mat(Mat::Constant(1, 1, a)); };
    m.diffusion_directional = [b](const Vec&, const Vec& v) { return Mat(Mat::Constant(1, 1, b * v(0))); };
    return m;
}

SdeModel linear_model(const Params& p) {
    const double c = p.count("c") ? p.at("c") : -1.0;
    SdeModel m;
    m.name = "linear";
    m.dim_state = 1;
    m.dim_noise = 1;
    m.drift = [c](const Vec& x) { return Vec(c * x); };
    m.diffusion = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
    m.drift_jacobian = [c](const Vec&) { return Mat(Mat::Constant(1, 1, c)); };
    m.diffusion_directional = [](const Vec&, const Vec&) { return Mat(Mat::Zero(1, 1)); };
    return m;
}

void check_params(const Params& given, const std::set<std::string>& allowed, const std::string& model) {
    for (const auto& [k, v] : given) {
        if (!allowed.count(k)) throw std::invalid_argument("unknown parameter '" + k + "' for model " + model);
    }
}

// ---------------------------------------------------------------- rows

ResultRow base_row(const std::string& experiment, const std::string& model, const ExperimentConfig& cfg, double T) {
    ResultRow r;
    r.experiment = experiment;
    r.model = model;
    r.T = T;
    r.dt = cfg.mc.dt;
    r.n_paths = cfg.mc.n_paths;
    r.seed = cfg.mc.seed;
    r.r = cfg.r;
    r.p = cfg.p;
    r.theta = cfg.theta;
    return r;
}

void fill_query(ResultRow& row, const BoundQuery& q) {
    row.T = q.T;
    row.r = q.r;
    row.p = q.p;
    row.q0 = q.q0;
    row.q1 = q.q1;
    row.theta = q.theta;
    row.x = q.x;
    row.y = q.y;
}

void fill_verdict(ResultRow& row, const McEstimate& est, const Verdict& v) {
    row.empirical = v.empirical;
    row.ci_low = est.ci_low;
    row.ci_high = est.ci_high;
    row.bound = v.bound;
    row.margin = v.margin;
    row.pass = v.pass;
}

std::string vec_str(const Vec& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v(i));
    return s;
}

Vec parse_vec(const std::string& s) {
    std::vector<double> out;
    if (s.empty()) return Vec();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(std::stod(item));
    return to_vec(out);
}

// ---------------------------------------------------------------- experiments

McConfig mc_for(const ExperimentConfig& cfg, const ZooEntry& e) {
    McConfig mc = cfg.mc;
    if (cfg.scheme_auto) mc.scheme = e.scheme;
    return mc;
}

BoundQuery query_for(const ExperimentConfig& cfg, const ZooEntry& e, double T) {
    BoundQuery q = default_query(e);
    q.T = T;
    q.r = cfg.r;
    q.p = cfg.p;
    q.theta = cfg.theta;
    if (!cfg.x.empty()) q.x = to_vec(cfg.x);
    if (!cfg.y.empty()) q.y = to_vec(cfg.y);
    return q;
}

std::vector<double> horizons(const ExperimentConfig& cfg, double dflt) {
    return cfg.T_list.empty() ? std::vector<double>{dflt} : cfg.T_list;
}

// How a certificate kind is compared with the simulation.
struct KindPlan {
    DistanceSpace space = DistanceSpace::original;
    bool marginal = true;
    bool uniform = true;
    bool force_linf = false;
};

KindPlan plan_for(ZooName n, const std::string& kind) {
    KindPlan k;
    if (n == ZooName::volatility) {
        if (kind == "linf") k = {DistanceSpace::internal, true, false, true};
        if (kind == "sup_linf") k = {DistanceSpace::internal, false, true, true};
        if (kind == "lipschitz" || kind == "global") k = {DistanceSpace::original, true, false, false};
        if (kind == "uniform2") k = {DistanceSpace::original, false, true, false};
    } else if (n == ZooName::wright_fisher) {
        k = {kind == "transformed" ? DistanceSpace::internal : DistanceSpace::original, false, true, true};
    }
    return k;
}

void run_lipschitz(const ExperimentConfig& cfg, RunResult& out) {
    const ZooEntry e = build_model(parse_zoo_name(cfg.model), cfg.params, cfg.variant);
    const auto kinds = certificate_kinds(e.name);
    if (kinds.empty()) throw std::invalid_argument("model " + cfg.model + " has no certificate");
    const std::string kind = cfg.certificate.empty() ? kinds.front() : cfg.certificate;
    const KindPlan plan = plan_for(e.name, kind);
    const McConfig mc = mc_for(cfg, e);
    for (const double T : horizons(cfg, e.default_T)) {
        BoundQuery q = query_for(cfg, e, T);
        if (plan.force_linf) {
            q.r = Exponent::infinity();
            q.p = Exponent::infinity();
        }
        const CertResult cr = certificate(e, q, kind);
        if (!cr.ok()) {
            ResultRow row = base_row("lipschitz", cfg.model, cfg, T);
            fill_query(row, q);
            row.bound = std::nan("");
            row.empirical = row.ci_low = row.ci_high = row.margin = std::nan("");
            row.pass = false;
            out.rows.push_back(row);
            out.notes.push_back(cfg.model + ": no certificate: " + cr.reason);
            continue;
        }
        BoundCertificate cert = *cr.cert;
        const auto& cu = cert.constants_used;
        if (cu.count("q0")) q.q0 = Exponent(cu.at("q0"));
        if (cu.count("q1")) q.q1 = Exponent(cu.at("q1"));
        if (cu.count("q") && !cu.count("q1")) {
            q.q0 = Exponent::infinity();
            q.q1 = Exponent(cu.at("q"));
        }
        if (cu.count("p") && e.name != ZooName::volatility)
            q.p = std::isinf(cu.at("p")) ? Exponent::infinity() : Exponent(cu.at("p"));
        const LipschitzEstimates est = empirical_lipschitz(e.model, cert.query, mc, plan.space);
        for (const bool uni : {false, true}) {
            if ((uni && !plan.uniform) || (!uni && !plan.marginal)) continue;
            const McEstimate& m = uni ? est.uniform : est.marginal;
            const Verdict v = verify_certificate(m, cert, cfg.slack);
            ResultRow row = base_row(uni ? "lipschitz_uniform" : "lipschitz_marginal", cfg.model, cfg, T);
            row.dt = mc.dt;
            fill_query(row, q);
            fill_verdict(row, m, v);
            out.rows.push_back(row);
            out.notes.push_back(cfg.model + " " + row.experiment + " T=" + short_num(T) + " [" + kind + "]: " +
                                v.message);
        }
    }
}

void run_exp_moment(const ExperimentConfig& cfg, RunResult& out) {
    const ZooEntry e = build_model(parse_zoo_name(cfg.model), cfg.params, cfg.variant);
    const McConfig mc = mc_for(cfg, e);
    for (std::size_t k = 0; k < e.lyapunov.size(); ++k) {
        if (cfg.lyapunov_index >= 0 && static_cast<std::size_t>(cfg.lyapunov_index) != k) continue;
        const LyapunovEntry& L = e.lyapunov[k];
        if (L.moment_form) {
            out.notes.push_back(cfg.model + ": Lyapunov entry " + std::to_string(k) +
                                " is a moment Lyapunov function; skipped");
            continue;
        }
        for (const double T : horizons(cfg, e.default_T)) {
            const BoundQuery q = query_for(cfg, e, T);
            const BoundCertificate cert = exp_moment_certificate(e, k, q.x, T);
            const McEstimate m = exp_moment_estimate(e.model, L.field, nullptr, q.x, T, mc);
            const Verdict v = verify_certificate(m, cert, cfg.slack);
            ResultRow row = base_row("exp_moment", cfg.model, cfg, T);
            row.dt = mc.dt;
            fill_query(row, q);
            row.y = q.x;
            row.r = Exponent(1.0);
            row.p = row.q0 = row.q1 = Exponent::infinity();
            fill_verdict(row, m, v);
            out.rows.push_back(row);
            out.notes.push_back(cfg.model + " exp_moment " + L.field.name + ": " + v.message);
        }
    }
}

std::vector<Vec> box_grid(const Box& b, int budget) {
    const auto d = b.lo.size();
    const int n = std::max(2, static_cast<int>(std::floor(std::pow(static_cast<double>(budget), 1.0 / d))));
    std::vector<Vec> out;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
        Vec x(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            x(i) = b.lo(i) + (b.hi(i) - b.lo(i)) * idx[static_cast<std::size_t>(i)] / (n - 1);
        }
        out.push_back(x);
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == n) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    return out;
}

void run_lyapunov_check(const ExperimentConfig& cfg, RunResult& out) {
    const ZooEntry e = build_model(parse_zoo_name(cfg.model), cfg.params, cfg.variant);
    const std::vector<Vec> grid = box_grid(e.box, cfg.grid_points);
    const double T = cfg.T_list.empty() ? e.default_T : cfg.T_list.front();
    const std::vector<double> ts = {0.0, T / 2.0, T};
    constexpr double tol = 1e-9;
    for (std::size_t k = 0; k < e.lyapunov.size(); ++k) {
        if (cfg.lyapunov_index >= 0 && static_cast<std::size_t>(cfg.lyapunov_index) != k) continue;
        const LyapunovEntry& L = e.lyapunov[k];
        TimeField ub;
        double ubar_min = 0.0;
        if (L.ubar) {
            ub = [f = L.ubar](double, const Vec& x) { return f(x); };
            for (const auto& x : grid) ubar_min = std::min(ubar_min, L.ubar(x));
        }
        const LyapunovCheckReport rep = lyapunov_check(e.model, L.field, ub, grid, ts, tol, L.moment_form);
        ResultRow row = base_row("lyapunov_check", cfg.model, cfg, T);
        row.n_paths = 0;
        row.dt = 0.0;
        row.x = e.box.lo;
        row.y = e.box.hi;
        // empirical: worst violation (LHS - RHS), bound: tolerance.
        row.empirical = -std::min(rep.worst_margin, ubar_min);
        row.ci_low = row.ci_high = row.empirical;
        row.bound = tol;
        row.margin = row.bound - row.empirical;
        row.pass = rep.pass && ubar_min >= -tol;
        out.rows.push_back(row);
        std::string msg = cfg.model + " " + L.field.name + ": worst margin " + format_double(rep.worst_margin) +
                          " on " + std::to_string(rep.grid_size) + " points";
        if (ubar_min < -tol) msg += "; U_bar < 0 somewhere (min " + format_double(ubar_min) + "): hypothesis violated";
        out.notes.push_back(msg);
    }
}

void run_identity(const ExperimentConfig& cfg, RunResult& out) {
    SdeModel model;
    Vec x, y;
    bool zero_noise = false;
    if (cfg.model == "gbm") {
        check_params(cfg.params, {"a", "b"}, "gbm");
        model = gbm_model(cfg.params);
        x = Vec::Constant(1, 1.0);
        y = Vec::Constant(1, 2.0);
    } else if (cfg.model == "linear") {
        check_params(cfg.params, {"c"}, "linear");
        model = linear_model(cfg.params);
        x = Vec::Constant(1, 1.0);
        y = Vec::Constant(1, 2.0);
        zero_noise = true;
    } else {
        const ZooEntry e = build_model(parse_zoo_name(cfg.model), cfg.params, cfg.variant);
        model = e.model;
        x = e.default_x;
        y = e.default_y;
    }
    if (!cfg.x.empty()) x = to_vec(cfg.x);
    if (!cfg.y.empty()) y = to_vec(cfg.y);
    const double T = cfg.T_list.empty() ? 1.0 : cfg.T_list.front();
    std::vector<double> dts = cfg.dt_list;
    if (dts.empty()) {
        if (zero_noise) {
            dts = {1e-4};
        } else {
            for (int k = 0; k <= 10; ++k) dts.push_back(1e-2 / std::pow(2.0, k));
        }
    }
    std::sort(dts.begin(), dts.end(), std::greater<>());
    const double dt_min = dts.back();
    const PairField V = power_distance(identity_map(model.dim_state), 2.0);
    std::vector<double> medians;
    for (const double dt : dts) {
        McConfig mc = cfg.mc;
        mc.scheme = Scheme::euler_maruyama;
        mc.dt = dt;
        mc.substeps = static_cast<int>(std::lround(dt / dt_min));
        if (std::abs(mc.substeps * dt_min - dt) > 1e-9 * dt) {
            throw std::invalid_argument("identity: every dt must be an integer multiple of the smallest");
        }
        std::vector<double> res(mc.n_paths);
        parallel_for(mc.n_paths, resolve_threads(mc.threads), [&](std::size_t i) {
            const PathPair pp = coupled_pair(model, x, y, T, mc, NoiseSource(mc.seed, i));
            res[i] = pathwise_identity_residual(model, V, pp).residual;
        });
        std::vector<double> s = res;
        std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2), s.end());
        double med = s[s.size() / 2];
        if (s.size() % 2 == 0) {
            med = 0.5 * (med + *std::max_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2)));
        }
        medians.push_back(med);
        ResultRow row = base_row("identity", cfg.model, cfg, T);
        row.dt = dt;
        row.x = x;
        row.y = y;
        row.r = Exponent(2.0);
        row.empirical = row.ci_low = row.ci_high = med;
        row.bound = zero_noise ? 1e-3 : kInf;
        row.margin = row.bound - med;
        row.pass = std::isfinite(med) && med <= row.bound;
        out.rows.push_back(row);
    }
    if (dts.size() >= 2) {
        const double slope = loglog_slope(dts, medians);
        const double factor = std::pow(2.0, slope);
        ResultRow row = base_row("identity_rate", cfg.model, cfg, T);
        row.dt = dt_min;
        row.x = x;
        row.y = y;
        row.r = Exponent(2.0);
        // empirical: fitted decrease factor per halving of dt; passes when >= 1.3.
        row.empirical = row.ci_low = row.ci_high = factor;
        row.bound = 1.3;
        row.margin = factor - 1.3;
        row.pass = factor >= 1.3;
        out.rows.push_back(row);
        out.notes.push_back(cfg.model + ": fitted slope " + short_num(slope) + ", factor per halving " +
                            short_num(factor));
        for (std::size_t i = 1; i < dts.size(); ++i) {
            out.notes.push_back("  dt " + short_num(dts[i - 1]) + " -> " + short_num(dts[i]) + ": ratio " +
                                short_num(medians[i - 1] / medians[i]));
        }
    }
}

void run_blowup(const ExperimentConfig& cfg, RunResult& out) {
    const Vec x0 = cfg.x.empty() ? Vec(Vec::Constant(2, 0.0)) : to_vec(cfg.x);
    Vec start = x0;
    if (cfg.x.empty()) start(0) = 2.0;
    const BlowupResult b = rode_blowup(start, cfg.mc.dt, cfg.threshold);
    ResultRow row = base_row("blowup", "rotation_counterexample", cfg, b.tau);
    row.n_paths = 1;
    row.x = start;
    row.y = start;
    row.empirical = row.ci_low = row.ci_high = b.tau;
    row.bound = 1.2;
    row.margin = row.bound - b.tau;
    row.pass = b.blew_up && b.final_norm >= cfg.threshold && b.tau <= 1.2;
    out.rows.push_back(row);
    out.notes.push_back("blowup from " + vec_str(start) + ": tau " + short_num(b.tau) + ", final norm " +
                        short_num(b.final_norm));
}

std::vector<std::pair<Vec, Vec>> direction_samples(const Box& b, int n, std::uint64_t seed) {
    const auto d = b.lo.size();
    std::vector<std::pair<Vec, Vec>> out;
    std::uint64_t c = 0;
    for (int i = 0; i < n; ++i) {
        Vec x(d), v(d);
        for (Eigen::Index k = 0; k < d; ++k) x(k) = b.lo(k) + (b.hi(k) - b.lo(k)) * unit(seed, c++);
        do {
            for (Eigen::Index k = 0; k < d; ++k) v(k) = gauss(seed ^ 0xA5A5A5A5ULL, c++);
        } while (v.norm() < 1e-3);
        out.emplace_back(x, v);
    }
    return out;
}

void monotonicity_rows(const std::string& name, const SdeModel& m, const Box& box, const ExperimentConfig& cfg,
                       RunResult& out) {
    constexpr double h = 1e-5, tol = 1e-6;
    // Keep the matched pairs inside the box.
    Box inner = box;
    for (Eigen::Index k = 0; k < box.lo.size(); ++k) {
        inner.lo(k) += h;
        inner.hi(k) -= h;
    }
    const auto samples = direction_samples(inner, cfg.grid_points, cfg.mc.seed);
    const auto pairs = matched_pairs(samples, h);
    for (const double p : cfg.p_list) {
        const SupResult der = monotonicity_sup(m, p, MonotonicityMode::derivative_form, samples);
        const SupResult dif = monotonicity_sup(m, p, MonotonicityMode::difference_form, pairs);
        ResultRow row = base_row("monotonicity", name, cfg, 0.0);
        row.n_paths = samples.size();
        row.dt = h;
        row.p = Exponent(p);
        row.x = box.lo;
        row.y = box.hi;
        row.empirical = row.ci_low = row.ci_high = der.value;
        row.bound = dif.value + tol;
        row.margin = row.bound - der.value;
        row.pass = der.value <= row.bound;
        out.rows.push_back(row);
        out.notes.push_back(name + " p=" + short_num(p) + ": derivative sup " + short_num(der.value) +
                            ", difference sup " + short_num(dif.value));
    }
}

void run_monotonicity(const ExperimentConfig& cfg, RunResult& out) {
    if (cfg.model == "counterexample") {
        const double p = cfg.params.count("p") ? cfg.params.at("p") : 0.5;
        check_params(cfg.params, {"p"}, "counterexample");
        const SdeModel m = counterexample_model(p);
        std::vector<std::pair<Vec, Vec>> samples;
        const int n = std::max(2, cfg.grid_points);
        for (int i = 0; i < n; ++i) {
            samples.emplace_back(Vec::Constant(1, -1.5 + 5.0 * i / (n - 1)), Vec::Constant(1, 1.0));
        }
        const SupResult der = monotonicity_sup(m, p, MonotonicityMode::derivative_form, samples);
        const SupResult dif = monotonicity_sup(m, p, MonotonicityMode::difference_form,
                                               {{Vec::Constant(1, -1.0), Vec::Constant(1, 3.0)}});
        ResultRow a = base_row("counterexample_derivative", "counterexample", cfg, 0.0);
        a.p = Exponent(p);
        a.n_paths = samples.size();
        a.dt = 0.0;
        a.x = Vec::Constant(1, -1.5);
        a.y = Vec::Constant(1, 3.5);
        a.empirical = a.ci_low = a.ci_high = der.value;
        a.bound = 0.0;
        a.margin = 1e-6 - std::abs(der.value);
        a.pass = std::abs(der.value) <= 1e-6;
        ResultRow b = a;
        b.experiment = "counterexample_difference";
        b.n_paths = 1;
        b.x = Vec::Constant(1, -1.0);
        b.y = Vec::Constant(1, 3.0);
        b.empirical = b.ci_low = b.ci_high = dif.value;
        b.bound = 1.0;
        b.margin = 1e-6 - std::abs(dif.value - 1.0);
        b.pass = std::abs(dif.value - 1.0) <= 1e-6;
        out.rows.push_back(a);
        out.rows.push_back(b);
        out.notes.push_back("counterexample p=" + short_num(p) + ": derivative sup " + short_num(der.value) +
                            ", difference value at (-1, 3) " + short_num(dif.value));
        return;
    }
    std::vector<ZooName> names;
    if (cfg.model == "all") {
        names = all_zoo_names();
    } else {
        names = {parse_zoo_name(cfg.model)};
    }
    for (const ZooName n : names) {
        const ZooEntry e =
            build_model(n, cfg.model == "all" ? Params{} : cfg.params, cfg.model == "all" ? "" : cfg.variant);
        monotonicity_rows(zoo_name(n), e.model, e.box, cfg, out);
    }
}

void run_burgers(const ExperimentConfig& cfg, RunResult& out) {
    check_params(cfg.params, {"c", "eta", "lip"}, "burgers");
    auto par = [&](const char* k, double d) { return cfg.params.count(k) ? cfg.params.at(k) : d; };
    const double c = par("c", 1.0);
    NoiseSpec ns;
    ns.eta = par("eta", 0.1);
    ns.lip = par("lip", 0.0);
    if (ns.lip != 0.0) throw std::invalid_argument("burgers: the shipped noise is additive, lip must be 0");
    const double T = cfg.T_list.empty() ? 0.1 : cfg.T_list.front();
    const Exponent r = cfg.r;
    Exponent p = cfg.p;
    if (p.is_inf()) p = Exponent(2.0 * r.value());
    const Exponent q(1.0 / (r.reciprocal() - p.reciprocal()));
    // Initial data supported on the first modes, so the certificate is the same for every n.
    const std::vector<double> x0 = cfg.x.empty() ? std::vector<double>{0.2, -0.1, 0.05} : cfg.x;
    const std::vector<double> y0 = cfg.y.empty() ? std::vector<double>{0.25, -0.08, 0.05} : cfg.y;
    McConfig mc = cfg.mc;
    mc.scheme = Scheme::euler_maruyama;
    for (const int n : cfg.modes) {
        if (static_cast<std::size_t>(n) < std::max(x0.size(), y0.size())) {
            throw std::invalid_argument("burgers: x and y need at most n coefficients");
        }
        const GalerkinModel g = galerkin_model(n, c, ns);
        BoundQuery qu;
        qu.T = T;
        qu.r = r;
        qu.p = p;
        qu.q0 = Exponent::infinity();
        qu.q1 = q;
        qu.theta = cfg.theta;
        qu.x = Vec::Zero(n);
        qu.y = Vec::Zero(n);
        for (std::size_t i = 0; i < x0.size(); ++i) qu.x(static_cast<Eigen::Index>(i)) = x0[i];
        for (std::size_t i = 0; i < y0.size(); ++i) qu.y(static_cast<Eigen::Index>(i)) = y0[i];
        const BoundCertificate cert = burgers_certificate(g, qu);
        const LipschitzEstimates est = empirical_lipschitz(g.model, qu, mc, DistanceSpace::original);
        const Verdict v = verify_certificate(est.uniform, cert, cfg.slack);
        ResultRow row = base_row("burgers_uniform", "burgers_n" + std::to_string(n), cfg, T);
        row.dt = mc.dt;
        fill_query(row, qu);
        fill_verdict(row, est.uniform, v);
        out.rows.push_back(row);
        out.notes.push_back("burgers n=" + std::to_string(n) + ": " + v.message);

        // Energy identity along simulated paths, checked at every step.
        double worst = 0.0;
        const std::size_t n_check = std::min<std::size_t>(mc.n_paths, 20);
        std::vector<double> per(n_check, 0.0);
        parallel_for(n_check, resolve_threads(mc.threads), [&](std::size_t i) {
            visit_path(g.model, qu.x, T, mc, NoiseSource(mc.seed, i),
                       [&](std::size_t, double, const Vec& s) { per[i] = std::max(per[i], energy_residual(s, c)); });
        });
        for (const double w : per) worst = std::max(worst, w);
        ResultRow er = base_row("burgers_energy", "burgers_n" + std::to_string(n), cfg, T);
        er.dt = mc.dt;
        er.n_paths = n_check;
        fill_query(er, qu);
        er.empirical = er.ci_low = er.ci_high = worst;
        er.bound = 1e-8;
        er.margin = er.bound - worst;
        er.pass = worst < 1e-8;
        out.rows.push_back(er);
    }
}

// ---------------------------------------------------------------- csv / report

const std::vector<std::string> kColumns = {"experiment", "model", "T",        "dt",      "n_paths", "seed", "r",
                                           "p",          "q0",    "q1",       "theta",   "x",       "y",    "empirical",
                                           "ci_low",     "ci_high", "bound", "margin", "verdict"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_field(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string safe_name(const std::string& s) {
    std::string o;
    for (const char c : s) o += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
    return o;
}

// Plots derived from a set of rows: bound vs empirical over T, residual vs dt.
std::vector<std::pair<std::string, std::string>> plots_for(const std::vector<ResultRow>& rows) {
    std::vector<std::pair<std::string, std::string>> out;
    std::map<std::string, std::vector<const ResultRow*>> lip, ident;
    for (const auto& r : rows) {
        if (r.experiment.rfind("lipschitz_", 0) == 0) lip[r.model + "__" + r.experiment].push_back(&r);
        if (r.experiment == "identity") ident[r.model].push_back(&r);
    }
    for (const auto& [key, rs] : lip) {
        std::set<double> Ts;
        for (const auto* r : rs) Ts.insert(r->T);
        if (Ts.size() < 2) continue;
        SvgSeries b{"bound", {}, {}}, em{"empirical", {}, {}};
        for (const auto* r : rs) {
            b.x.push_back(r->T);
            b.y.push_back(r->bound);
            em.x.push_back(r->T);
            em.y.push_back(r->empirical);
        }
        out.emplace_back(safe_name(key) + "_bound_vs_T.svg",
                         render_svg(key + ": bound vs empirical", {b, em}, false, true, "x: T"));
    }
    for (const auto& [model, rs] : ident) {
        if (rs.size() < 2) continue;
        SvgSeries s{"median residual", {}, {}};
        for (const auto* r : rs) {
            s.x.push_back(r->dt);
            s.y.push_back(r->empirical);
        }
        const double slope = loglog_slope(s.x, s.y);
        out.emplace_back(safe_name(model) + "_residual_vs_dt.svg",
                         render_svg(model + ": identity residual", {s}, true, true,
                                    "fitted slope " + format_double(slope)));
    }
    return out;
}

}  // namespace

std::string experiment_name(ExperimentKind k) {
    for (const auto& [kk, s] : kKinds) {
        if (kk == k) return s;
    }
    return "unknown";
}

// Accepts the subcommand spelling too ("exp-moment", "check-lyapunov", "identity").
ExperimentKind parse_experiment(const std::string& s) {
    std::string t = s;
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "check_lyapunov") t = "lyapunov_check";
    if (t == "identity") t = "identity_residual";
    for (const auto& [k, name] : kKinds) {
        if (name == t) return k;
    }
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

ExperimentConfig parse_config(const std::string& text, const std::string& src) {
    toml::table tbl;
    try {
        tbl = toml::parse(text, src);
    } catch (const toml::parse_error& err) {
        std::ostringstream os;
        os << src << ":" << err.source().begin.line << ": " << err.description();
        throw std::invalid_argument(os.str());
    }
    ExperimentConfig cfg;
    check_keys(tbl, {"experiment", "model", "query", "mc", "output"}, src, "the top level");
    if (auto n = tbl.get("experiment")) cfg.kind = parse_experiment(str(*n, src, "experiment"));
    if (auto m = tbl["model"].as_table()) {
        check_keys(*m, {"name", "variant", "params"}, src, "[model]");
        if (auto n = m->get("name")) cfg.model = str(*n, src, "name");
        if (auto n = m->get("variant")) cfg.variant = str(*n, src, "variant");
        if (auto pt = (*m)["params"].as_table()) {
            for (const auto& [k, v] : *pt) cfg.params[std::string(k.str())] = num(v, src, std::string(k.str()));
        }
    }
    if (auto q = tbl["query"].as_table()) {
        check_keys(*q,
                   {"T", "r", "p", "theta", "x", "y", "certificate", "lyapunov", "threshold", "p_list", "modes",
                    "grid_points"},
                   src, "[query]");
        if (auto n = q->get("T")) cfg.T_list = num_list(*n, src, "T");
        if (auto n = q->get("r")) cfg.r = exponent_of(*n, src, "r");
        if (auto n = q->get("p")) cfg.p = exponent_of(*n, src, "p");
        if (auto n = q->get("theta")) cfg.theta = num(*n, src, "theta");
        if (auto n = q->get("x")) cfg.x = num_list(*n, src, "x");
        if (auto n = q->get("y")) cfg.y = num_list(*n, src, "y");
        if (auto n = q->get("certificate")) cfg.certificate = str(*n, src, "certificate");
        if (auto n = q->get("lyapunov")) cfg.lyapunov_index = static_cast<int>(num(*n, src, "lyapunov"));
        if (auto n = q->get("threshold")) cfg.threshold = num(*n, src, "threshold");
        if (auto n = q->get("p_list")) cfg.p_list = num_list(*n, src, "p_list");
        if (auto n = q->get("modes")) {
            cfg.modes.clear();
            for (const double v : num_list(*n, src, "modes")) cfg.modes.push_back(static_cast<int>(v));
        }
        if (auto n = q->get("grid_points")) cfg.grid_points = static_cast<int>(num(*n, src, "grid_points"));
    }
    if (auto m = tbl["mc"].as_table()) {
        check_keys(*m, {"n_paths", "dt", "seed", "scheme", "ci_level", "substeps", "threads", "dt_list", "slack"}, src,
                   "[mc]");
        if (auto n = m->get("n_paths")) cfg.mc.n_paths = static_cast<std::size_t>(num(*n, src, "n_paths"));
        if (auto n = m->get("dt")) cfg.mc.dt = num(*n, src, "dt");
        if (auto n = m->get("seed")) {
            if (auto iv = n->value<std::int64_t>()) {
                cfg.mc.seed = static_cast<std::uint64_t>(*iv);
            } else {
                config_error(src, "'seed' must be an integer");
            }
        }
        if (auto n = m->get("scheme")) {
            cfg.mc.scheme = parse_scheme(str(*n, src, "scheme"));
            cfg.scheme_auto = false;
        }
        if (auto n = m->get("ci_level")) cfg.mc.ci_level = num(*n, src, "ci_level");
        if (auto n = m->get("substeps")) cfg.mc.substeps = static_cast<int>(num(*n, src, "substeps"));
        if (auto n = m->get("threads")) cfg.mc.threads = static_cast<int>(num(*n, src, "threads"));
        if (auto n = m->get("dt_list")) cfg.dt_list = num_list(*n, src, "dt_list");
        if (auto n = m->get("slack")) cfg.slack = num(*n, src, "slack");
    }
    if (auto o = tbl["output"].as_table()) {
        check_keys(*o, {"dir", "csv", "svg"}, src, "[output]");
        if (auto n = o->get("dir")) cfg.out_dir = str(*n, src, "dir");
        if (auto n = o->get("csv")) cfg.csv_name = str(*n, src, "csv");
        if (auto n = o->get("svg")) {
            if (auto b = n->value<bool>()) {
                cfg.svg = *b;
            } else {
                config_error(src, "'svg' must be a boolean");
            }
        }
    }
    return cfg;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_header() {
    std::string s;
    for (std::size_t i = 0; i < kColumns.size(); ++i) s += (i ? "," : "") + kColumns[i];
    return s;
}

std::string csv_line(const ResultRow& r) {
    std::vector<std::string> f = {r.experiment,
                                  r.model,
                                  format_double(r.T),
                                  format_double(r.dt),
                                  std::to_string(r.n_paths),
                                  std::to_string(r.seed),
                                  exp_str(r.r),
                                  exp_str(r.p),
                                  exp_str(r.q0),
                                  exp_str(r.q1),
                                  format_double(r.theta),
                                  vec_str(r.x),
                                  vec_str(r.y),
                                  format_double(r.empirical),
                                  format_double(r.ci_low),
                                  format_double(r.ci_high),
                                  format_double(r.bound),
                                  format_double(r.margin),
                                  r.pass ? "pass" : "fail"};
    std::string s;
    for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + f[i];
    return s;
}

bool RunResult::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass; });
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    RunResult out;
    switch (cfg.kind) {
        case ExperimentKind::lipschitz: run_lipschitz(cfg, out); break;
        case ExperimentKind::exp_moment: run_exp_moment(cfg, out); break;
        case ExperimentKind::lyapunov_check: run_lyapunov_check(cfg, out); break;
        case ExperimentKind::identity_residual: run_identity(cfg, out); break;
        case ExperimentKind::blowup: run_blowup(cfg, out); break;
        case ExperimentKind::monotonicity: run_monotonicity(cfg, out); break;
        case ExperimentKind::burgers: run_burgers(cfg, out); break;
    }
    return out;
}

std::string write_outputs(const ExperimentConfig& cfg, const RunResult& res) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string name = cfg.csv_name.empty() ? experiment_name(cfg.kind) + ".csv" : cfg.csv_name;
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << csv_header() << '\n';
    for (const auto& r : res.rows) os << csv_line(r) << '\n';
    if (cfg.svg) {
        for (const auto& [file, svg] : plots_for(res.rows)) {
            std::ofstream so(fs::path(cfg.out_dir) / file, std::ios::binary);
            so << svg;
        }
    }
    return path.string();
}

std::vector<ResultRow> read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error(path + ":0: cannot open");
    std::vector<ResultRow> rows;
    std::string line;
    std::size_t ln = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error(path + ":" + std::to_string(ln) + ": " + why);
    };
    while (std::getline(is, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (ln == 1) {
            if (line != csv_header()) fail("unexpected header");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != kColumns.size()) {
            fail("expected " + std::to_string(kColumns.size()) + " fields, got " + std::to_string(f.size()));
        }
        try {
            ResultRow r;
            r.experiment = f[0];
            r.model = f[1];
            r.T = parse_double_field(f[2]);
            r.dt = parse_double_field(f[3]);
            r.n_paths = static_cast<std::size_t>(std::stoull(f[4]));
            r.seed = std::stoull(f[5]);
            r.r = parse_exponent(f[6]);
            r.p = parse_exponent(f[7]);
            r.q0 = parse_exponent(f[8]);
            r.q1 = parse_exponent(f[9]);
            r.theta = parse_double_field(f[10]);
            r.x = parse_vec(f[11]);
            r.y = parse_vec(f[12]);
            r.empirical = parse_double_field(f[13]);
            r.ci_low = parse_double_field(f[14]);
            r.ci_high = parse_double_field(f[15]);
            r.bound = parse_double_field(f[16]);
            r.margin = parse_double_field(f[17]);
            if (f[18] != "pass" && f[18] != "fail") fail("verdict must be pass or fail");
            r.pass = f[18] == "pass";
            rows.push_back(r);
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception& ex) {
            fail(ex.what());
        }
    }
    return rows;
}

ReportResult emit_report(const std::vector<std::string>& csv_paths, const std::string& svg_dir) {
    ReportResult rep;
    std::vector<ResultRow> all;
    for (const auto& p : csv_paths) {
        auto rows = read_csv(p);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    std::map<std::string, std::pair<int, int>> by_model;
    int pass = 0;
    for (const auto& r : all) {
        auto& [k, n] = by_model[r.model];
        ++n;
        if (r.pass) {
            ++k;
            ++pass;
        }
    }
    std::ostringstream os;
    for (const auto& [m, kn] : by_model) {
        os << m << ": " << kn.first << "/" << kn.second << " pass\n";
        for (const auto& r : all) {
            if (r.model == m && !r.pass) {
                os << "  fail " << r.experiment << " T=" << format_double(r.T) << " empirical "
                   << format_double(r.empirical) << " bound " << format_double(r.bound) << "\n";
            }
        }
    }
    if (!all.empty()) os << "total: " << pass << "/" << all.size() << " pass\n";
    rep.summary = os.str();
    rep.exit_code = pass == static_cast<int>(all.size()) ? 0 : 1;
    if (!svg_dir.empty()) {
        const auto plots = plots_for(all);
        if (!plots.empty()) std::filesystem::create_directories(svg_dir);
        for (const auto& [file, svg] : plots) {
            const auto path = (std::filesystem::path(svg_dir) / file).string();
            std::ofstream so(path, std::ios::binary);
            so << svg;
            rep.svg_files.push_back(path);
        }
    }
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("loglog_slope: x values coincide");
    return (n * sxy - sx * sy) / den;
}

std::string render_svg(const std::string& title, const std::vector<SvgSeries>& series, bool log_x, bool log_y,
                       const std::string& footer) {
    const double W = 640, H = 420, L = 70, R = 20, Tm = 40, B = 60;
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            x0 = std::min(x0, a);
            x1 = std::max(x1, a);
            y0 = std::min(y0, b);
            y1 = std::max(y1, b);
        }
    }
    if (!(x1 > x0)) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - Tm - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
    os << "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    os << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" font-size=\"11\">"
       << (log_x ? "1e" : "") << svg_num(x0) << "</text>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"end\">"
       << (log_x ? "1e" : "") << svg_num(x1) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" font-size=\"11\" text-anchor=\"end\">"
       << (log_y ? "1e" : "") << svg_num(y0) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << Tm + 10 << "\" font-size=\"11\" text-anchor=\"end\">"
       << (log_y ? "1e" : "") << svg_num(y1) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = colors[k % 4];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            pts += svg_num(px(a)) + "," + svg_num(py(b)) + " ";
            os << "<circle cx=\"" << svg_num(px(a)) << "\" cy=\"" << svg_num(py(b)) << "\" r=\"3\" fill=\"" << col
               << "\"/>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"" << pts << "\"/>\n";
        os << "<text x=\"" << W - R - 150 << "\" y=\"" << Tm + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << col
           << "\">" << s.label << "</text>\n";
    }
    os << "<text x=\"320\" y=\"" << H - 20 << "\" text-anchor=\"middle\" font-size=\"12\">" << footer << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace sdestab
