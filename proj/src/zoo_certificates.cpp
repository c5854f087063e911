#include "sdestab/modelzoo.hpp"

#include "zoo_internal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdestab {

using zoo::get;

namespace {

constexpr double kGolden = 0.6180339887498949;

// A bound setup together with the free constants it was built from.
struct SetupChoice {
    std::optional<BoundSetup> setup;
    std::string reason;
    std::map<std::string, double> free;
    double log_value = kInf;
};

SetupChoice no_setup(std::string why) {
    SetupChoice c;
    c.reason = std::move(why);
    return c;
}

// int_0^T e^{a s} ds
double tint(double a, double T) { return time_integral(1.0, -a, T, 1); }

// argmin of f on [lo, hi]: grid of n points then golden-section refinement.
std::pair<double, double> minimize_1d(const std::function<double(double)>& f, double lo, double hi, int n,
                                      bool log_grid) {
    const double a = log_grid ? std::log(lo) : lo;
    const double b = log_grid ? std::log(hi) : hi;
    auto g = [&](double s) {
        const double v = f(log_grid ? std::exp(s) : s);
        return std::isnan(v) ? kInf : v;
    };
    int best = 0;
    double fbest = kInf;
    for (int i = 0; i < n; ++i) {
        const double v = g(a + (b - a) * i / (n - 1));
        if (v < fbest) {
            fbest = v;
            best = i;
        }
    }
    const double step = (b - a) / (n - 1);
    double l = a + step * std::max(0, best - 1), r = a + step * std::min(n - 1, best + 1);
    double c = r - kGolden * (r - l), d = l + kGolden * (r - l);
    double fc = g(c), fd = g(d);
    for (int k = 0; k < 80; ++k) {
        if (fc <= fd) {
            r = d;
            d = c;
            fd = fc;
            c = r - kGolden * (r - l);
            fc = g(c);
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + kGolden * (r - l);
            fd = g(d);
        }
    }
    double arg = a + step * best, val = fbest;
    const double mid = 0.5 * (l + r);
    const double fm = g(mid);
    if (fm < val) {
        arg = mid;
        val = fm;
    }
    return {log_grid ? std::exp(arg) : arg, val};
}

BoundSetup base_setup(const BoundQuery& q, Exponent r, Exponent p, double theta) {
    BoundSetup s;
    s.uniform = true;
    s.r = r;
    s.p = p;
    s.rho_aux = Exponent::infinity();
    s.theta = theta;
    s.T = q.T;
    return s;
}

void set_c0(BoundSetup& s, double c0) {
    s.c0 = [c0](double) { return c0; };
    s.c0_int = c0 * s.T;
}

LyapTerm make_term(int group, int j, Exponent q, ScalarField f, std::function<double(const Vec&)> ubar = nullptr,
                   bool q_limit = false) {
    LyapTerm t;
    t.group = group;
    t.j = j;
    t.q = q;
    t.q_limit = q_limit;
    t.field = std::move(f);
    t.ubar = std::move(ubar);
    return t;
}

double log_of(const BoundSetup& s, const BoundQuery& q) {
    return setup_log_bound(s, (q.x - q.y).norm(), q.x, q.y);
}

std::string check_query(const ZooEntry& e, const BoundQuery& q) {
    if (!(q.T > 0.0) || !std::isfinite(q.T)) return "T must be positive and finite";
    const auto d = static_cast<Eigen::Index>(e.model.dim_state);
    if (q.x.size() != d || q.y.size() != d) return "x and y must have dimension " + std::to_string(d);
    if (!e.model.domain.contains(q.x) || !e.model.domain.contains(q.y)) {
        return "x and y must lie in the domain " + e.model.domain.describe();
    }
    return "";
}

// 1/r - 1/p, the Hoelder budget left for the Lyapunov terms.
double budget(const BoundQuery& q) { return q.r.reciprocal() - q.p.reciprocal(); }

std::string check_theta(const BoundQuery& q) {
    if (!(q.theta > 0.0) || (!q.p.is_inf() && q.theta >= q.p.value())) return "theta must lie in (0, p)";
    return "";
}

// Noise contributions of the oscillator models with Lipschitz constant L of g.
struct OscNoiseConsts {
    double c0 = 0.0;
    double c1 = 0.0;
};

OscNoiseConsts osc_noise_consts(double L, const Exponent& p, double theta) {
    OscNoiseConsts c;
    c.c1 = std::max(4.0, theta + 2.0) * L * L / 8.0;
    c.c0 = L == 0.0 ? 0.0 : (p.value() - theta) * L * L / 8.0;
    return c;
}

SetupChoice vdp_setup_at(const ZooEntry& e, const BoundQuery& q, double rho) {
    const Params& P = e.params;
    const auto nz = zoo::osc_data(e);
    const double a = get(P, "alpha"), gamma = get(P, "gamma"), delta = get(P, "delta");
    const double qv = 1.0 / budget(q);
    const double lin = 0.5 * (gamma + std::hypot(gamma, delta - 1.0));
    const auto nc = osc_noise_consts(nz.lip, q.p, q.theta);
    ScalarField U = zoo::vdp_field(P, nz, rho);
    const double th = U.alpha;
    const double K = qv * a * a / (8.0 * rho * (a - rho * nz.eta1));
    BoundSetup s = base_setup(q, q.r, q.p, q.theta);
    const double c1c = lin + nc.c1;
    s.c1 = [c1c, K, th](double t) { return c1c + K * std::exp(th * t); };
    s.c1_int = c1c * q.T + K * tint(th, q.T);
    set_c0(s, nc.c0);
    s.terms.push_back(make_term(1, 1, Exponent(qv), U, zoo::vdp_ubar(P, nz, rho)));
    SetupChoice c;
    c.setup = s;
    c.free = {{"rho", rho}, {"q", qv}, {"vartheta", th}};
    return c;
}

SetupChoice vdp_setup(const ZooEntry& e, const BoundQuery& q) {
    const auto nz = zoo::osc_data(e);
    if (nz.linear && q.p.is_inf()) return no_setup("linear noise needs a finite p");
    if (auto w = check_theta(q); !w.empty()) return no_setup(w);
    if (!(budget(q) > 1e-12)) return no_setup("needs r < p");
    const double a = get(e.params, "alpha");
    const double rho_max = nz.eta1 > 0.0 ? a / nz.eta1 * (1.0 - 1e-9) : 1e3;
    auto f = [&](double rho) { return log_of(*vdp_setup_at(e, q, rho).setup, q); };
    const auto [rho, lv] = minimize_1d(f, rho_max * 1e-7, rho_max, 161, true);
    auto c = vdp_setup_at(e, q, rho);
    c.log_value = lv;
    return c;
}

SetupChoice duffing_setup_at(const ZooEntry& e, const BoundQuery& q, double phi, double rho0, double rho1) {
    const Params& P = e.params;
    const auto nz = zoo::osc_data(e);
    const double a1 = get(P, "alpha1"), a2 = get(P, "alpha2"), a3 = get(P, "alpha3");
    const double g = budget(q);
    const double q0 = 1.0 / (phi * g), q1 = 1.0 / ((1.0 - phi) * g);
    const double lin = 0.5 * (a2 + std::hypot(a1 - 1.0, a2));
    const auto nc = osc_noise_consts(nz.lip, q.p, q.theta);
    ScalarField U0 = zoo::duffing_field(P, nz, rho0);
    ScalarField U1 = zoo::duffing_field(P, nz, rho1);
    U0.name = "U10";
    U1.name = "U11";
    const double al0 = U0.alpha, al1 = U1.alpha;
    const double K1 = q1 * a3 * a3 / (8.0 * rho1 * (a3 - rho1 * nz.eta1));
    const double K0 = 9.0 * q0 * q.T / (8.0 * rho0);
    BoundSetup s = base_setup(q, q.r, q.p, q.theta);
    const double c1c = lin + nc.c1;
    s.c1 = [=](double t) { return c1c + K1 * std::exp(al1 * t) + K0 * std::exp(al0 * t); };
    s.c1_int = c1c * q.T + K1 * tint(al1, q.T) + K0 * tint(al0, q.T);
    set_c0(s, nc.c0);
    s.terms.push_back(make_term(1, 0, Exponent(q0), U0));
    s.terms.push_back(make_term(1, 1, Exponent(q1), U1, zoo::duffing_ubar(P, nz, rho1)));
    SetupChoice c;
    c.setup = s;
    c.free = {{"phi", phi}, {"rho0", rho0}, {"rho1", rho1}, {"q0", q0}, {"q1", q1}};
    return c;
}

SetupChoice duffing_setup(const ZooEntry& e, const BoundQuery& q) {
    const auto nz = zoo::osc_data(e);
    if (nz.linear && q.p.is_inf()) return no_setup("linear noise needs a finite p");
    if (auto w = check_theta(q); !w.empty()) return no_setup(w);
    if (!(budget(q) > 1e-12)) return no_setup("needs r < p");
    const double a3 = get(e.params, "alpha3");
    const double r1_max = nz.eta1 > 0.0 ? a3 / nz.eta1 * (1.0 - 1e-9) : 1e2;
    const int n = 25;
    double best = kInf;
    double bphi = 0.5, b0 = 1.0, b1 = 1.0;
    for (int k = 1; k <= 9; ++k) {
        const double phi = 0.1 * k;
        for (int i = 0; i < n; ++i) {
            const double rho0 = 1e-4 * std::pow(1e6, static_cast<double>(i) / (n - 1));
            for (int j = 0; j < n; ++j) {
                const double rho1 = r1_max * 1e-6 * std::pow(1e6, static_cast<double>(j) / (n - 1));
                const double lv = log_of(*duffing_setup_at(e, q, phi, rho0, rho1).setup, q);
                if (lv < best) {
                    best = lv;
                    bphi = phi;
                    b0 = rho0;
                    b1 = rho1;
                }
            }
        }
    }
    auto c = duffing_setup_at(e, q, bphi, b0, b1);
    c.log_value = best;
    return c;
}

double lorenz_lambda(const Params& P) {
    const Mat A = zoo::lorenz_A(P);
    const Mat S = A + A.transpose();
    return Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues().maxCoeff();
}

SetupChoice lorenz_setup_at(const ZooEntry& e, const BoundQuery& q, double rho) {
    const Params& P = e.params;
    const double beta = get(P, "beta");
    const double qv = 1.0 / budget(q);
    const double lam = lorenz_lambda(P) / 2.0;
    const double al = 2.0 * rho * beta + zoo::lorenz_vartheta(P);
    const double K = qv * q.T / (8.0 * rho);
    BoundSetup s = base_setup(q, q.r, q.p, q.theta);
    s.c1 = [=](double t) { return lam + K * std::exp(al * t); };
    s.c1_int = lam * q.T + K * tint(al, q.T);
    set_c0(s, 0.0);
    s.terms.push_back(make_term(1, 0, Exponent(qv), zoo::quadratic_norm("U", rho, 3, al, 3.0 * rho * beta)));
    SetupChoice c;
    c.setup = s;
    c.free = {{"rho", rho}, {"q", qv}};
    return c;
}

SetupChoice lorenz_setup(const ZooEntry& e, const BoundQuery& q) {
    if (auto w = check_theta(q); !w.empty()) return no_setup(w);
    if (!(budget(q) > 1e-12)) return no_setup("needs r < p");
    auto f = [&](double rho) { return log_of(*lorenz_setup_at(e, q, rho).setup, q); };
    const auto [rho, lv] = minimize_1d(f, 1e-5, 1e2, 141, true);
    auto c = lorenz_setup_at(e, q, rho);
    c.log_value = lv;
    return c;
}

SetupChoice langevin_setup_at(const ZooEntry& e, const BoundQuery& q, double rho) {
    const double qv = 1.0 / budget(q);
    const double c1 = 1.5 + 9.0 * qv * q.T / (4.0 * rho);
    BoundSetup s = base_setup(q, q.r, q.p, q.theta);
    s.c1 = [c1](double) { return c1; };
    s.c1_int = c1 * q.T;
    set_c0(s, 0.0);
    s.terms.push_back(make_term(1, 0, Exponent(qv), zoo::langevin_field(e.params, rho)));
    SetupChoice c;
    c.setup = s;
    c.free = {{"rho", rho}, {"q", qv}};
    return c;
}

SetupChoice langevin_setup(const ZooEntry& e, const BoundQuery& q) {
    if (auto w = check_theta(q); !w.empty()) return no_setup(w);
    if (!(budget(q) > 1e-12)) return no_setup("needs r < p");
    const double rho_max = 2.0 * get(e.params, "gamma") / get(e.params, "eps");
    auto f = [&](double rho) { return log_of(*langevin_setup_at(e, q, rho).setup, q); };
    const auto [rho, lv] = minimize_1d(f, rho_max * 1e-7, rho_max, 141, true);
    auto c = langevin_setup_at(e, q, rho);
    c.log_value = lv;
    return c;
}

// Additive noise and a one-sided Lipschitz drift: the bound e^T ||x - y|| holds
// pathwise, hence in every L^r.
SetupChoice brownian_setup(const ZooEntry&, const BoundQuery& q) {
    BoundSetup s = base_setup(q, Exponent::infinity(), Exponent::infinity(), q.theta > 0.0 ? q.theta : 1.0);
    s.c1 = [](double) { return 1.0; };
    s.c1_int = q.T;
    set_c0(s, 0.0);
    SetupChoice c;
    c.setup = s;
    c.log_value = log_of(s, q);
    return c;
}

SetupChoice sir_setup_at(const ZooEntry& e, const BoundQuery& q, double theta) {
    const Params& P = e.params;
    const double a = get(P, "alpha"), beta = get(P, "beta"), gamma = get(P, "gamma"), delta = get(P, "delta");
    const double r = q.r.value();
    const double kq = std::pow(1.0 + std::sqrt(2.0), 2) / 4.0;
    const double k0 = (r - theta) / 2.0;
    const double k1 = 1.0 + std::max(0.0, theta / 2.0 - 1.0) * kq;
    const double T = q.T;
    BoundSetup s = base_setup(q, q.r, q.r, theta);
    set_c0(s, 2.0 * k0 * kq * beta * beta);
    const double c1 = gamma / 4.0 + 2.0 * beta * beta * k1;
    s.c1 = [c1](double) { return c1; };
    s.c1_int = c1 * T;
    const Exponent inf = Exponent::infinity();
    s.terms.push_back(make_term(1, 0, inf, zoo::sir_linear(a * T * std::sqrt(kq), delta), nullptr, true));
    s.terms.push_back(
        make_term(0, 0, inf, zoo::sir_quadratic("Q0", 2.0 * T * beta * beta * k0 * kq, delta, gamma), nullptr, true));
    s.terms.push_back(
        make_term(1, 0, inf, zoo::sir_quadratic("Q1", 2.0 * T * beta * beta * k1, delta, gamma), nullptr, true));
    SetupChoice c;
    c.setup = s;
    c.free = {{"theta", theta}, {"kappa_Q", kq}};
    return c;
}

SetupChoice sir_setup(const ZooEntry& e, const BoundQuery& q) {
    if (q.r.is_inf()) return no_setup("needs a finite r");
    const double r = q.r.value();
    auto f = [&](double th) { return log_of(*sir_setup_at(e, q, th).setup, q); };
    const auto [th, lv] = minimize_1d(f, r * 1e-4, r * (1.0 - 1e-4), 101, false);
    auto c = sir_setup_at(e, q, th);
    c.log_value = lv;
    return c;
}

// sigma(x) = beta R x: the noise term of ||x - y|| vanishes and the bound is pathwise.
SetupChoice psychology_setup_at(const ZooEntry& e, const BoundQuery& q, double eps) {
    const double a = get(e.params, "alpha"), delta = get(e.params, "delta");
    const double c = delta * delta / (32.0 * eps) + delta * delta / (4.0 * (2.0 * a + eps));
    BoundSetup s = base_setup(q, Exponent::infinity(), Exponent::infinity(), q.theta > 0.0 ? q.theta : 1.0);
    s.c1 = [c](double) { return c; };
    s.c1_int = c * q.T;
    set_c0(s, 0.0);
    const double k = 2.0 * q.T * (2.0 * a + eps);
    ScalarField U = zoo::quadratic_norm("U", k, 2, 0.0, 0.0);
    s.terms.push_back(make_term(1, 0, Exponent::infinity(), U, nullptr, true));
    SetupChoice out;
    out.setup = s;
    out.free = {{"eps", eps}};
    return out;
}

SetupChoice psychology_setup(const ZooEntry& e, const BoundQuery& q) {
    auto f = [&](double eps) { return log_of(*psychology_setup_at(e, q, eps).setup, q); };
    const auto [eps, lv] = minimize_1d(f, 1e-4, 1e2, 121, true);
    auto c = psychology_setup_at(e, q, eps);
    c.log_value = lv;
    return c;
}

// Smallest fixed point of rho = 2 q T exp(2 rho (eta^2 + eps) T), or nullopt.
std::optional<double> brusselator_rho(double qv, double T, double eta, double eps) {
    const double k = 2.0 * (eta * eta + eps) * T;
    double rho = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double next = 2.0 * qv * T * std::exp(k * rho);
        if (!std::isfinite(next) || next > 1e12) return std::nullopt;
        if (std::abs(next - rho) <= 1e-15 * next) return next * (1.0 + 1e-9);
        rho = next;
    }
    return std::nullopt;
}

SetupChoice brusselator_setup_at(const ZooEntry& e, const BoundQuery& q, double inv_p, double eps) {
    const Params& P = e.params;
    const double alpha = get(P, "alpha"), delta = get(P, "delta");
    const auto nz = zoo::brusselator_noise(P);
    const Exponent p(1.0 / inv_p);
    const double qv = 1.0 / (q.r.reciprocal() - inv_p);
    const auto rho = brusselator_rho(qv, q.T, nz.eta, eps);
    if (!rho) return no_setup("no fixed point rho = 2 q T exp(2 rho (eta^2 + eps) T)");
    const double lam = 0.5 * (std::hypot(alpha + 1.0, alpha) - (alpha + 1.0));
    BoundSetup s = base_setup(q, q.r, p, 2.0);
    set_c0(s, (p.value() - 2.0) * nz.L * nz.L / 2.0);
    const double c1 = lam + nz.L * nz.L / 2.0;
    s.c1 = [c1](double) { return c1; };
    s.c1_int = c1 * q.T;
    s.terms.push_back(make_term(1, 0, Exponent(qv), zoo::brusselator_field(*rho, nz.eta, eps, delta)));
    SetupChoice c;
    c.setup = s;
    c.free = {{"p", p.value()}, {"q", qv}, {"eps", eps}, {"rho", *rho}};
    return c;
}

SetupChoice brusselator_setup(const ZooEntry& e, const BoundQuery& q) {
    if (e.variant == "affine") {
        return no_setup("affine noise v + beta x does not vanish on the axes; no certificate for this variant");
    }
    if (q.r.is_inf()) return no_setup("needs a finite r");
    const double m = std::min(q.r.reciprocal(), 0.5);
    double best = kInf;
    double bphi = 0.5, beps = 1.0;
    for (int i = 1; i <= 49; ++i) {
        const double phi = i / 50.0;
        for (int j = 0; j < 41; ++j) {
            const double eps = 1e-3 * std::pow(1e5, j / 40.0);
            const auto c = brusselator_setup_at(e, q, m * phi, eps);
            if (!c.setup) continue;
            const double lv = log_of(*c.setup, q);
            if (lv < best) {
                best = lv;
                bphi = phi;
                beps = eps;
            }
        }
    }
    if (!std::isfinite(best)) return no_setup("no admissible (p, eps): the fixed point for rho does not exist");
    auto c = brusselator_setup_at(e, q, m * bphi, beps);
    c.log_value = best;
    return c;
}

SetupChoice euclidean_setup(const ZooEntry& e, const BoundQuery& q) {
    if (auto w = check_query(e, q); !w.empty()) return no_setup(w);
    switch (e.name) {
        case ZooName::van_der_pol: return vdp_setup(e, q);
        case ZooName::duffing_vdp: return duffing_setup(e, q);
        case ZooName::lorenz: return lorenz_setup(e, q);
        case ZooName::langevin: return langevin_setup(e, q);
        case ZooName::brownian_dynamics: return brownian_setup(e, q);
        case ZooName::sir: return sir_setup(e, q);
        case ZooName::psychology: return psychology_setup(e, q);
        case ZooName::brusselator: return brusselator_setup(e, q);
        case ZooName::rotation_counterexample:
            return no_setup("the rotation model has no certificate: solutions blow up in finite time");
        default: return no_setup("model has no Euclidean uniform certificate");
    }
}

CertResult volatility_certificate(const ZooEntry& e, const BoundQuery& q, const std::string& kind) {
    const Params& P = e.params;
    const FellerReport fr = feller_boundary(ZooName::volatility, P);
    if (!fr.zero_inaccessible) return CertResult::none("boundary 0 is accessible: " + fr.reason);
    const double b = get(P, "b"), eta = get(P, "eta"), beta = get(P, "beta"), gamma = get(P, "gamma");
    const double x = q.x(0), y = q.y(0), T = q.T;
    const double S = volatility_rate(P);
    std::map<std::string, double> consts{{"S", S}};
    auto finish = [&](double lv) {
        return CertResult{make_certificate(lv, TheoremKind::ModelSpecific, q, consts, "volatility/" + kind), ""};
    };
    if (kind == "global") {
        if (q.r.is_inf()) return CertResult::none("global certificate needs a finite p");
        const double G = volatility_global_rate(P, q.r.value());
        if (!std::isfinite(G)) return CertResult::none("global rate is infinite for this p");
        consts["G_p"] = G;
        return finish(std::log(std::abs(x - y)) + T * gamma + T * G);
    }
    if (b == 1.0) return CertResult::none("b = 1: the transform x^{1-b} degenerates");
    if (!std::isfinite(S)) return CertResult::none("transformed rate S is infinite");
    const double dz = std::abs(std::pow(x, 1.0 - b) - std::pow(y, 1.0 - b));
    if (kind == "linf") return finish(std::log(dz) + T * S);
    if (kind == "sup_linf") return finish(std::log(dz) + T * std::max(0.0, S));
    if (q.r.is_inf()) return CertResult::none("needs a finite p");
    const double p = q.r.value();
    const double mn = std::min(x, y), mx = std::max(x, y);
    if (kind == "lipschitz") {
        const double M = volatility_moment_ratio(P, p * b, eta);
        if (!std::isfinite(M)) return CertResult::none("moment ratio for U_{pb} is infinite");
        consts["M_pb"] = M;
        const double top = std::max(std::pow(x, p * b), std::pow(y, p * b));
        return finish(std::log(std::abs(x - y)) + std::log(eta + top) / p - b * std::log(mn) + T * (S + M / p));
    }
    if (kind == "uniform2") {
        if (eta < 1.0) return CertResult::none("uniform2 needs eta >= 1");
        if (p < 1.0) return CertResult::none("uniform2 needs p >= 1");
        const double Mp = volatility_moment_ratio(P, p, eta);
        const double Mk = volatility_moment_ratio(P, 2.0 * p * b - 2.0 + 2.0 * b, eta);
        if (!std::isfinite(Mp) || !std::isfinite(Mk)) return CertResult::none("a moment ratio is infinite");
        consts["M_p"] = Mp;
        consts["M_k"] = Mk;
        const double top = std::max(std::pow(mx, b), std::pow(mn, b));
        const double bot = std::min(std::pow(mx, b), std::pow(mn, b));
        const double lv = std::log(std::abs(x - y)) + std::log(1.0 + eta + top) - std::log(bot) +
                          std::log1p(std::pow(2.0 * p * b * beta * T * T, 1.0 / p)) +
                          T * (std::max(0.0, S) + std::max(0.0, Mp / p)) +
                          T * std::max(0.0, T * Mk / (2.0 * p));
        return finish(lv);
    }
    return CertResult::none("unknown volatility certificate kind '" + kind + "'");
}

CertResult wright_fisher_certificate(const ZooEntry& e, const BoundQuery& q, const std::string& kind) {
    const Params& P = e.params;
    const double beta = get(P, "beta"), s = get(P, "s");
    if (2.0 * get(P, "rho0") < beta || 2.0 * get(P, "rho1") < beta) {
        return CertResult::none("needs 2 rho0 >= beta and 2 rho1 >= beta");
    }
    const double x = q.x(0), y = q.y(0), T = q.T;
    auto z = [](double u) { return std::asin(std::sqrt(u)); };
    auto dphi = [](double u) { return 1.0 / std::sqrt(4.0 * u * (1.0 - u)); };
    std::map<std::string, double> consts{{"rate", std::abs(s) / 2.0}};
    double lv;
    if (kind == "transformed") {
        lv = std::log(std::abs(z(x) - z(y))) + T * std::abs(s) / 2.0;
    } else if (kind == "original") {
        lv = std::log(std::abs(x - y)) + std::log(std::max(dphi(x), dphi(y))) + T * std::abs(s) / 2.0;
    } else {
        return CertResult::none("unknown Wright-Fisher certificate kind '" + kind + "'");
    }
    return CertResult{make_certificate(lv, TheoremKind::ModelSpecific, q, consts, "wright_fisher/" + kind), ""};
}

}  // namespace

std::vector<std::string> certificate_kinds(ZooName n) {
    switch (n) {
        case ZooName::volatility: return {"linf", "sup_linf", "lipschitz", "uniform2", "global"};
        case ZooName::wright_fisher: return {"transformed", "original"};
        case ZooName::rotation_counterexample: return {};
        default: return {"uniform"};
    }
}

std::optional<BoundSetup> certificate_setup(const ZooEntry& e, const BoundQuery& q, std::string* reason) {
    SetupChoice c = euclidean_setup(e, q);
    if (reason) *reason = c.reason;
    return c.setup;
}

CertResult certificate(const ZooEntry& e, const BoundQuery& q, const std::string& kind_in) {
    const auto kinds = certificate_kinds(e.name);
    if (kinds.empty())
        return CertResult::none("the rotation model has no certificate: solutions blow up in finite time");
    const std::string kind = kind_in.empty() ? kinds.front() : kind_in;
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
        return CertResult::none("certificate kind '" + kind + "' is not available for " + zoo_name(e.name));
    }
    if (auto w = check_query(e, q); !w.empty()) return CertResult::none(w);
    if (e.name == ZooName::volatility) return volatility_certificate(e, q, kind);
    if (e.name == ZooName::wright_fisher) return wright_fisher_certificate(e, q, kind);
    SetupChoice c = euclidean_setup(e, q);
    if (!c.setup) return CertResult::none(c.reason);
    check_exponents(*c.setup);
    const BoundSetup& s = *c.setup;
    std::map<std::string, double> consts = c.free;
    consts["int_c0"] = s.c0_int;
    consts["int_c1"] = s.c1_int;
    consts["theta"] = s.theta;
    consts["p"] = s.p.value();
    const double lv = log_of(s, q);
    if (std::isnan(lv)) return CertResult::none("bound evaluated to NaN");
    const TheoremKind tk = s.r.is_inf() && !q.r.is_inf() ? TheoremKind::ModelSpecific : TheoremKind::CorUV2;
    return CertResult{make_certificate(lv, tk, q, std::move(consts), zoo_name(e.name)), ""};
}

std::string feasibility(const ZooEntry& e, const BoundQuery& q, const std::string& kind) {
    const CertResult c = certificate(e, q, kind);
    if (!c.ok()) return c.reason;
    if (c.cert->overflow || !std::isfinite(c.cert->log_value)) return "certificate is not finite";
    return "";
}

BoundCertificate exp_moment_certificate(const ZooEntry& e, std::size_t k, const Vec& x, double T) {
    if (k >= e.lyapunov.size())
        throw std::invalid_argument("exp_moment_certificate: no Lyapunov entry " + std::to_string(k));
    const ScalarField& U = e.lyapunov[k].field;
    const double lv = U.value(x) + time_integral(U.beta, U.alpha, T, 1);
    BoundQuery q;
    q.T = T;
    q.x = x;
    q.y = x;
    return make_certificate(lv, TheoremKind::ExpMoment, q,
                            {{"U(x)", U.value(x)}, {"alpha", U.alpha}, {"beta", U.beta}}, zoo_name(e.name));
}

double lorenz_reference_log_bound(const ZooEntry& e, const BoundQuery& q, double rho) {
    if (e.name != ZooName::lorenz) throw std::invalid_argument("lorenz_reference_log_bound: not the Lorenz entry");
    const Params& P = e.params;
    const double T = q.T, r = q.r.value();
    const double al = 2.0 * rho * get(P, "beta") + zoo::lorenz_vartheta(P);
    return std::log((q.x - q.y).norm()) + lorenz_lambda(P) * T / 2.0 + r * T * T * std::exp(al * T) / (32.0 * rho) +
           (3.0 + rho * (q.x.squaredNorm() + q.y.squaredNorm())) / (2.0 * r);
}

}  // namespace sdestab
