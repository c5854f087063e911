#include "sdestab/modelzoo.hpp"

#include "zoo_internal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdestab {

namespace zoo {

double get(const Params& p, const std::string& key) {
    const auto it = p.find(key);
    if (it == p.end()) throw std::invalid_argument("missing model parameter '" + key + "'");
    return it->second;
}

ScalarField field(std::string name, std::function<double(const Vec&)> v, std::function<Vec(const Vec&)> g,
                  std::function<Mat(const Vec&)> h, double alpha, double beta) {
    ScalarField f;
    f.name = std::move(name);
    f.value = std::move(v);
    f.gradient = std::move(g);
    f.hessian = std::move(h);
    f.alpha = alpha;
    f.beta = beta;
    return f;
}

ScalarField quadratic_norm(std::string name, double rho, int d, double alpha, double beta) {
    return field(
        std::move(name), [rho](const Vec& x) { return rho * x.squaredNorm(); },
        [rho](const Vec& x) { return Vec(2.0 * rho * x); },
        [rho, d](const Vec&) { return Mat(2.0 * rho * Mat::Identity(d, d)); }, alpha, beta);
}

std::pair<double, double> safe_interval(const std::function<double(double)>& fprime, double ylo, double yhi,
                                        double dt, double margin) {
    const double floor_val = -0.5 / dt;
    const bool bounded = std::isfinite(yhi);
    auto at = [&](double t) {
        if (bounded) return ylo + (yhi - ylo) / (1.0 + std::exp(-t));
        return ylo + std::exp(t);
    };
    auto ok = [&](double t) {
        const double y = at(t);
        if (!(y > ylo) || (bounded && !(y < yhi))) return false;
        const double v = fprime(y);
        return std::isfinite(v) && v >= floor_val;
    };
    const int n = 2001;
    const double t0 = -28.0, t1 = 28.0;
    std::vector<char> good(n);
    int best = -1;
    double fbest = -kInf;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + (t1 - t0) * i / (n - 1);
        good[i] = ok(t);
        const double y = at(t);
        if (good[i]) {
            const double v = fprime(y);
            if (v > fbest) {
                fbest = v;
                best = i;
            }
        }
    }
    if (best < 0) throw std::domain_error("transformed scheme: no step-size safe region for this dt");
    int a = best, b = best;
    while (a > 0 && good[a - 1]) --a;
    while (b < n - 1 && good[b + 1]) ++b;
    auto refine = [&](double bad_t, double good_t) {
        for (int k = 0; k < 200; ++k) {
            const double m = 0.5 * (bad_t + good_t);
            (ok(m) ? good_t : bad_t) = m;
        }
        return at(good_t);
    };
    const double step = (t1 - t0) / (n - 1);
    double lo = a == 0 ? ylo + margin : refine(t0 + step * (a - 1), t0 + step * a);
    double hi = b == n - 1 ? (bounded ? yhi - margin : kInf) : refine(t0 + step * (b + 1), t0 + step * b);
    lo = std::max(lo, ylo + margin);
    if (bounded) hi = std::min(hi, yhi - margin);
    return {lo, hi};
}

}  // namespace zoo

using zoo::get;

namespace {

const std::vector<std::pair<ZooName, std::string>> kNames = {
    {ZooName::van_der_pol, "van_der_pol"},
    {ZooName::duffing_vdp, "duffing_vdp"},
    {ZooName::lorenz, "lorenz"},
    {ZooName::langevin, "langevin"},
    {ZooName::brownian_dynamics, "brownian_dynamics"},
    {ZooName::sir, "sir"},
    {ZooName::psychology, "psychology"},
    {ZooName::brusselator, "brusselator"},
    {ZooName::volatility, "volatility"},
    {ZooName::wright_fisher, "wright_fisher"},
    {ZooName::rotation_counterexample, "rotation_counterexample"},
};

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (const double x : v) out(i++) = x;
    return out;
}

Box box(Vec lo, Vec hi) { return Box{std::move(lo), std::move(hi)}; }

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument("infeasible parameters: " + what);
}

Mat col(const Vec& v) { return Mat(v); }

// Scalar noise g(y) of the oscillator models: constant sqrt(eta0) or c y.
struct OscNoise {
    bool linear = false;
    double eta0 = 0.0, c = 0.0;
    double g(double y) const { return linear ? c * y : std::sqrt(eta0); }
    double dg() const { return linear ? c : 0.0; }
    double eta0_eff() const { return linear ? 0.0 : eta0; }
    double eta1_eff() const { return linear ? c * c : 0.0; }
    double lip() const { return linear ? std::abs(c) : 0.0; }
};

OscNoise osc_noise(const ZooEntry& e) {
    OscNoise n;
    n.linear = e.variant == "linear";
    n.eta0 = get(e.params, "eta0");
    n.c = get(e.params, "c");
    return n;
}

void wire_oscillator(ZooEntry& e, const OscNoise& nz, std::function<Vec(const Vec&)> drift,
                     std::function<Mat(const Vec&)> jac) {
    SdeModel& m = e.model;
    m.dim_state = 2;
    m.dim_noise = 1;
    m.domain = DomainSpec::all_space();
    m.drift = std::move(drift);
    m.drift_jacobian = std::move(jac);
    m.diffusion = [nz](const Vec& x) {
        Mat s = Mat::Zero(2, 1);
        s(1, 0) = nz.g(x(0));
        return s;
    };
    m.diffusion_directional = [nz](const Vec&, const Vec& v) {
        Mat s = Mat::Zero(2, 1);
        s(1, 0) = nz.dg() * v(0);
        return s;
    };
}

}  // namespace

namespace zoo {

double vdp_vartheta(const Params& p, const OscNoiseData& nz, double rho) {
    const double gamma = get(p, "gamma"), delta = get(p, "delta");
    const double dd = std::abs(delta - 1.0);
    const double e0 = nz.eta0, e1 = nz.eta1;
    if (dd == 0.0) return std::max(e1, 2.0 * gamma + 4.0 * e0 * rho);
    std::vector<std::function<double(double)>> br = {
        [=](double r) { return dd / r + e1; },
        [=](double r) { return r * dd + 2.0 * gamma + 4.0 * e0 * rho; },
    };
    return minmax_theta(br, 1e-8, 1e8, false).second;
}

OscNoiseData osc_data(const ZooEntry& e) {
    const OscNoise n = osc_noise(e);
    return {n.eta0_eff(), n.eta1_eff(), n.lip(), n.linear};
}

double lorenz_vartheta(const Params& p) {
    const double a1 = get(p, "alpha1"), a2 = get(p, "alpha2");
    std::vector<std::function<double(double)>> br = {
        [=](double r) { return (a1 + a2) * (a1 + a2) / r - 2.0 * a1; },
        [](double r) { return r - 1.0; },
    };
    return minmax_theta(br, 1e-8, 1e8, true).second;
}

Mat lorenz_A(const Params& p) {
    Mat A = Mat::Zero(3, 3);
    const double a1 = get(p, "alpha1"), a2 = get(p, "alpha2"), a3 = get(p, "alpha3");
    A << -a1, a1, 0, a2, -1, 0, 0, 0, -a3;
    return A;
}

ScalarField vdp_field(const Params& p, const OscNoiseData& nz, double rho) {
    return quadratic_norm("U", rho, 2, vdp_vartheta(p, nz, rho), rho * nz.eta0);
}

std::function<double(const Vec&)> vdp_ubar(const Params& p, const OscNoiseData& nz, double rho) {
    const double a = get(p, "alpha");
    return [=](const Vec& x) { return 2.0 * rho * (a - rho * nz.eta1) * std::pow(x(0) * x(1), 2); };
}

ScalarField duffing_field(const Params& p, const OscNoiseData& nz, double rho) {
    const double a1 = get(p, "alpha1"), a2 = get(p, "alpha2");
    const double A = rho * nz.eta0 + a2;
    const double excess = std::max(0.0, nz.eta1 - 2.0 * a1 * A);
    const double beta = rho * nz.eta0 + rho * excess * excess / (4.0 * A);
    return field(
        "U",
        [=](const Vec& x) { return rho * (std::pow(x(0), 4) / 2.0 + a1 * x(0) * x(0) + x(1) * x(1)); },
        [=](const Vec& x) { return vec({rho * (2.0 * std::pow(x(0), 3) + 2.0 * a1 * x(0)), 2.0 * rho * x(1)}); },
        [=](const Vec& x) {
            Mat H = Mat::Zero(2, 2);
            H(0, 0) = rho * (6.0 * x(0) * x(0) + 2.0 * a1);
            H(1, 1) = 2.0 * rho;
            return H;
        },
        2.0 * A, beta);
}

std::function<double(const Vec&)> duffing_ubar(const Params& p, const OscNoiseData& nz, double rho) {
    const double a3 = get(p, "alpha3");
    return [=](const Vec& x) { return 2.0 * rho * (a3 - rho * nz.eta1) * std::pow(x(0) * x(1), 2); };
}

double double_well(double q) { return std::pow(q * q - 1.0, 2) / 4.0; }

ScalarField langevin_field(const Params& p, double rho) {
    const double eps = get(p, "eps");
    return field(
        "U0", [=](const Vec& x) { return rho * double_well(x(0)) + rho * x(1) * x(1) / 2.0; },
        [=](const Vec& x) { return vec({rho * (std::pow(x(0), 3) - x(0)), rho * x(1)}); },
        [=](const Vec& x) {
            Mat H = Mat::Zero(2, 2);
            H(0, 0) = rho * (3.0 * x(0) * x(0) - 1.0);
            H(1, 1) = rho;
            return H;
        },
        0.0, rho * eps / 2.0);
}

ScalarField sir_linear(double coef, double delta) {
    // coef (x1 + x2 - 1 + shift) with shift chosen by the caller through beta.
    return field(
        "U_lin", [=](const Vec& x) { return coef * (x(0) + x(1)); },
        [=](const Vec&) { return vec({coef, coef, 0.0}); }, [](const Vec&) { return Mat(Mat::Zero(3, 3)); },
        -delta, coef * delta);
}

ScalarField sir_quadratic(std::string name, double coef, double delta, double gamma) {
    return field(
        std::move(name), [=](const Vec& x) { return coef * std::pow(x(0) + x(1) - 1.0, 2); },
        [=](const Vec& x) {
            const double s = 2.0 * coef * (x(0) + x(1) - 1.0);
            return vec({s, s, 0.0});
        },
        [=](const Vec&) {
            Mat H = Mat::Zero(3, 3);
            H.block(0, 0, 2, 2).setConstant(2.0 * coef);
            return H;
        },
        -2.0 * delta, coef * gamma / 2.0);
}

ScalarField brusselator_field(double rho, double eta, double eps, double delta) {
    return field(
        "U", [=](const Vec& x) { return rho * std::pow(x(0) + x(1), 2); },
        [=](const Vec& x) {
            const double s = 2.0 * rho * (x(0) + x(1));
            return vec({s, s});
        },
        [=](const Vec&) { return Mat(Mat::Constant(2, 2, 2.0 * rho)); }, 2.0 * rho * (eta * eta + eps),
        delta * delta / (2.0 * eps) + rho * eta * eta);
}

BrusselatorNoise brusselator_noise(const Params& p) {
    const double beta = get(p, "beta"), w1 = get(p, "w1"), w2 = get(p, "w2");
    return {std::abs(beta) * std::abs(w1 + w2) / 2.0, std::abs(beta) * std::hypot(w1, w2) / 2.0};
}

std::vector<std::pair<double, double>> volatility_rate_terms(const Params& p) {
    const double kappa = get(p, "kappa"), c = get(p, "c"), delta = get(p, "delta"), gamma = get(p, "gamma");
    const double alpha = get(p, "alpha"), a = get(p, "a"), beta = get(p, "beta"), b = get(p, "b");
    return {{(1.0 - b) * gamma, 0.0},
            {-delta * b, -1.0},
            {-alpha * (a - b), a - 1.0},
            {-kappa * (c + b), -c - 1.0},
            {b * (1.0 - b) * beta * beta / 2.0, 2.0 * b - 2.0}};
}

}  // namespace zoo

double power_sum_sup(std::vector<std::pair<double, double>> terms) {
    std::sort(terms.begin(), terms.end(), [](const auto& l, const auto& r) { return l.second < r.second; });
    std::vector<std::pair<double, double>> merged;
    for (const auto& [c, e] : terms) {
        if (!merged.empty() && std::abs(merged.back().second - e) <= 1e-12) {
            merged.back().first += c;
        } else {
            merged.emplace_back(c, e);
        }
    }
    double scale = 0.0;
    for (const auto& [c, e] : merged) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) return 0.0;
    std::erase_if(merged, [&](const auto& t) { return std::abs(t.first) <= 1e-12 * scale; });
    if (merged.empty()) return 0.0;
    const auto lowest = merged.front();
    const auto highest = merged.back();
    if (lowest.second < 0.0 && lowest.first > 0.0) return kInf;
    if (highest.second > 0.0 && highest.first > 0.0) return kInf;
    auto limit = [&](double sign) {
        // sign < 0: u -> 0, sign > 0: u -> inf
        const auto& lead = sign < 0 ? lowest : highest;
        if (lead.second * sign > 0.0) return -kInf;
        double v = 0.0;
        for (const auto& [c, e] : merged) {
            if (e == 0.0) v += c;
        }
        return v;
    };
    auto f = [&](double u) {
        double v = 0.0;
        for (const auto& [c, e] : merged) v += c * std::pow(u, e);
        return v;
    };
    return std::max({limit(-1.0), limit(1.0), grid_sup_1d(f, 1e-10, 1e10, 4000, true)});
}

double volatility_rate(const Params& p) { return power_sum_sup(zoo::volatility_rate_terms(p)); }

double volatility_moment_ratio(const Params& p, double power, double eta) {
    const double kappa = get(p, "kappa"), c = get(p, "c"), delta = get(p, "delta"), gamma = get(p, "gamma");
    const double alpha = get(p, "alpha"), a = get(p, "a"), beta = get(p, "beta"), b = get(p, "b");
    const std::vector<std::pair<double, double>> num = {{kappa, power - 1.0 - c},
                                                        {delta, power - 1.0},
                                                        {gamma, power},
                                                        {-alpha, power + a - 1.0},
                                                        {0.5 * (power - 1.0) * beta * beta, power + 2.0 * b - 2.0}};
    if (power == 0.0) return 0.0;
    auto R = [&](double u) {
        double n = 0.0;
        for (const auto& [cc, e] : num) {
            if (cc != 0.0) n += cc * std::pow(u, e);
        }
        return power * n / (eta + std::pow(u, power));
    };
    // Tails: the ratio behaves like power * c * u^{e - d} with d the leading
    // exponent of the denominator.
    for (const double side : {-1.0, 1.0}) {
        const double d = (power > 0.0) == (side > 0.0) ? power : 0.0;
        double lead_e = side > 0 ? -kInf : kInf, lead_c = 0.0;
        for (const auto& [cc, e] : num) {
            if (cc == 0.0) continue;
            if ((side > 0 && e > lead_e) || (side < 0 && e < lead_e)) {
                lead_e = e;
                lead_c = cc;
            }
        }
        if (lead_c == 0.0) continue;
        const double ex = lead_e - d;
        if (ex * side > 1e-12 && power * lead_c > 0.0) return kInf;
    }
    return grid_sup_1d(R, 1e-12, 1e12, 4000, true);
}

double volatility_global_rate(const Params& p, double moment_p) {
    const double kappa = get(p, "kappa"), c = get(p, "c"), alpha = get(p, "alpha"), a = get(p, "a");
    const double beta = get(p, "beta"), b = get(p, "b");
    // For p < 1 the (p - 1) term is nonpositive; the p = 1 rate bounds it.
    const double pp = std::max(1.0, moment_p);
    return power_sum_sup({{-c * kappa, -c - 1.0},
                          {-a * alpha, a - 1.0},
                          {(pp - 1.0) * b * b * beta * beta / 2.0, 2.0 * b - 2.0}});
}

std::string zoo_name(ZooName n) {
    for (const auto& [k, s] : kNames) {
        if (k == n) return s;
    }
    return "unknown";
}

ZooName parse_zoo_name(const std::string& s) {
    for (const auto& [k, name] : kNames) {
        if (name == s) return k;
    }
    throw std::invalid_argument("unknown model '" + s + "'");
}

std::vector<ZooName> all_zoo_names() {
    std::vector<ZooName> out;
    for (const auto& [k, s] : kNames) out.push_back(k);
    return out;
}

Params default_params(ZooName n) {
    switch (n) {
        case ZooName::van_der_pol:
            return {{"alpha", 1.0}, {"gamma", 0.5}, {"delta", 1.5}, {"eta0", 0.1}, {"c", 0.3}, {"rho", 0.1}};
        case ZooName::duffing_vdp:
            return {{"alpha1", 1.0}, {"alpha2", 0.5}, {"alpha3", 1.0}, {"eta0", 0.1}, {"c", 0.3}, {"rho", 0.1}};
        case ZooName::lorenz:
            return {{"alpha1", 10.0}, {"alpha2", 28.0}, {"alpha3", 8.0 / 3.0}, {"beta", 1.0}, {"rho", 0.05}};
        case ZooName::langevin: return {{"gamma", 1.0}, {"eps", 0.5}, {"rho", 1.0}};
        case ZooName::brownian_dynamics: return {{"eps", 0.5}, {"rho", 1.0}, {"d", 2.0}};
        case ZooName::sir:
            return {{"alpha", 0.5}, {"beta", 0.2}, {"gamma", 0.3}, {"delta", 0.2}, {"rho", 1.0}};
        case ZooName::psychology:
            return {{"alpha", 1.0}, {"delta", 1.0}, {"beta", 0.5}, {"rho", 0.1}, {"lyap_p", 1.0}};
        case ZooName::brusselator:
            return {{"alpha", 1.5}, {"delta", 1.0}, {"beta", 0.3}, {"w1", 1.0}, {"w2", 0.5},
                    {"v1", 0.1}, {"v2", 0.1}, {"rho", 0.5}, {"eps_lyap", 1.0}};
        case ZooName::volatility:
            return {{"kappa", 0.0}, {"c", 1.0}, {"delta", 0.3}, {"gamma", -1.0}, {"alpha", 0.0},
                    {"a", 2.0}, {"beta", 0.5}, {"b", 0.5}, {"eta", 1.0}, {"moment_p", 2.0}};
        case ZooName::wright_fisher: return {{"beta", 0.4}, {"rho0", 0.3}, {"rho1", 0.3}, {"s", 1.0}};
        case ZooName::rotation_counterexample: return {{"rho", 0.1}};
    }
    return {};
}

std::string default_variant(ZooName n) {
    switch (n) {
        case ZooName::van_der_pol:
        case ZooName::duffing_vdp: return "additive";
        case ZooName::brusselator: return "bounded";
        default: return "";
    }
}

namespace {

void build_van_der_pol(ZooEntry& e) {
    const Params& p = e.params;
    const double a = get(p, "alpha"), gamma = get(p, "gamma"), delta = get(p, "delta");
    require(a > 0.0, "alpha > 0");
    require(gamma >= 0.0 && delta >= 0.0 && get(p, "eta0") >= 0.0, "gamma, delta, eta0 >= 0");
    const OscNoise nz = osc_noise(e);
    wire_oscillator(
        e, nz,
        [=](const Vec& x) { return vec({x(1), (gamma - a * x(0) * x(0)) * x(1) - delta * x(0)}); },
        [=](const Vec& x) {
            Mat J(2, 2);
            J << 0.0, 1.0, -2.0 * a * x(0) * x(1) - delta, gamma - a * x(0) * x(0);
            return J;
        });
    const auto nd = zoo::osc_data(e);
    const double rho = get(p, "rho");
    e.lyapunov.push_back({zoo::vdp_field(p, nd, rho), zoo::vdp_ubar(p, nd, rho), "U = rho ||x||^2"});
    e.box = box(vec({-2.0, -2.0}), vec({2.0, 2.0}));
    e.default_x = vec({0.5, 0.2});
    e.default_y = vec({0.6, 0.1});
    e.default_T = 0.5;
}

void build_duffing(ZooEntry& e) {
    const Params& p = e.params;
    const double a1 = get(p, "alpha1"), a2 = get(p, "alpha2"), a3 = get(p, "alpha3");
    require(a1 >= 0.0, "alpha1 >= 0");
    require(a2 > 0.0, "alpha2 > 0");
    require(a3 > 0.0, "alpha3 > 0");
    require(get(p, "eta0") >= 0.0, "eta0 >= 0");
    const OscNoise nz = osc_noise(e);
    wire_oscillator(
        e, nz,
        [=](const Vec& x) {
            return vec({x(1), a2 * x(1) - a1 * x(0) - a3 * x(0) * x(0) * x(1) - std::pow(x(0), 3)});
        },
        [=](const Vec& x) {
            Mat J(2, 2);
            J << 0.0, 1.0, -a1 - 2.0 * a3 * x(0) * x(1) - 3.0 * x(0) * x(0), a2 - a3 * x(0) * x(0);
            return J;
        });
    const auto nd = zoo::osc_data(e);
    const double rho = get(p, "rho");
    e.lyapunov.push_back(
        {zoo::duffing_field(p, nd, rho), zoo::duffing_ubar(p, nd, rho), "U = rho (x1^4/2 + alpha1 x1^2 + x2^2)"});
    e.box = box(vec({-2.0, -2.0}), vec({2.0, 2.0}));
    e.default_x = vec({0.5, 0.2});
    e.default_y = vec({0.6, 0.1});
    e.default_T = 0.5;
}

void build_lorenz(ZooEntry& e) {
    const Params& p = e.params;
    const double a1 = get(p, "alpha1"), a2 = get(p, "alpha2"), a3 = get(p, "alpha3"), beta = get(p, "beta");
    require(a1 >= 0.0 && a2 >= 0.0 && a3 >= 0.0 && beta >= 0.0, "alpha1, alpha2, alpha3, beta >= 0");
    const Mat A = zoo::lorenz_A(p);
    SdeModel& m = e.model;
    m.dim_state = 3;
    m.dim_noise = 3;
    m.domain = DomainSpec::all_space();
    m.drift = [A](const Vec& x) {
        Vec v = A * x;
        v(1) -= x(0) * x(2);
        v(2) += x(0) * x(1);
        return v;
    };
    m.drift_jacobian = [A](const Vec& x) {
        Mat J = A;
        J(1, 0) -= x(2);
        J(1, 2) -= x(0);
        J(2, 0) += x(1);
        J(2, 1) += x(0);
        return J;
    };
    const double sb = std::sqrt(beta);
    m.diffusion = [sb](const Vec&) { return Mat(sb * Mat::Identity(3, 3)); };
    m.diffusion_directional = [](const Vec&, const Vec&) { return Mat(Mat::Zero(3, 3)); };
    const double rho = get(p, "rho");
    const double th = zoo::lorenz_vartheta(p);
    e.lyapunov.push_back({zoo::quadratic_norm("U", rho, 3, 2.0 * rho * beta + th, 3.0 * rho * beta), nullptr,
                          "U = rho ||x||^2"});
    e.box = box(vec({-3.0, -3.0, -3.0}), vec({3.0, 3.0, 3.0}));
    e.default_x = vec({1.0, 1.0, 1.0});
    e.default_y = vec({1.05, 0.95, 1.0});
    e.default_T = 0.1;
}

void build_langevin(ZooEntry& e) {
    const Params& p = e.params;
    const double gamma = get(p, "gamma"), eps = get(p, "eps"), rho = get(p, "rho");
    require(gamma > 0.0 && eps > 0.0, "gamma, eps > 0");
    SdeModel& m = e.model;
    m.dim_state = 2;
    m.dim_noise = 1;
    m.domain = DomainSpec::all_space();
    m.drift = [=](const Vec& x) { return vec({x(1), -(std::pow(x(0), 3) - x(0)) - gamma * x(1)}); };
    m.drift_jacobian = [=](const Vec& x) {
        Mat J(2, 2);
        J << 0.0, 1.0, -(3.0 * x(0) * x(0) - 1.0), -gamma;
        return J;
    };
    const double se = std::sqrt(eps);
    m.diffusion = [se](const Vec&) { return col(vec({0.0, se})); };
    m.diffusion_directional = [](const Vec&, const Vec&) { return Mat(Mat::Zero(2, 1)); };
    e.lyapunov.push_back({zoo::langevin_field(p, rho),
                          [=](const Vec& x) { return rho * (gamma - rho * eps / 2.0) * x(1) * x(1); },
                          "U0 = rho Phi(x1) + rho ||x2||^2 / 2, Phi(q) = (q^2 - 1)^2 / 4"});
    e.box = box(vec({-2.0, -2.0}), vec({2.0, 2.0}));
    e.default_x = vec({0.5, 0.2});
    e.default_y = vec({0.6, 0.1});
    e.default_T = 0.5;
}

void build_brownian(ZooEntry& e) {
    const Params& p = e.params;
    const double eps = get(p, "eps"), rho = get(p, "rho");
    const int d = static_cast<int>(get(p, "d"));
    require(eps > 0.0, "eps > 0");
    require(d >= 1, "d >= 1");
    require(rho >= 0.0 && rho <= 2.0 / eps, "rho in [0, 2/eps]");
    SdeModel& m = e.model;
    m.dim_state = d;
    m.dim_noise = d;
    m.domain = DomainSpec::all_space();
    m.drift = [](const Vec& x) { return Vec(-(x.array().cube() - x.array()).matrix()); };
    m.drift_jacobian = [](const Vec& x) { return Mat((1.0 - 3.0 * x.array().square()).matrix().asDiagonal()); };
    const double se = std::sqrt(eps);
    m.diffusion = [se, d](const Vec&) { return Mat(se * Mat::Identity(d, d)); };
    m.diffusion_directional = [d](const Vec&, const Vec&) { return Mat(Mat::Zero(d, d)); };
    // Delta Phi <= eta0 + 2 eta1 Phi with eta1 = 1/2, eta0 = 11 d (per coordinate
    // 3 s - 1 - (s - 1)^2 / 4 peaks at s = 7 with value 11).
    const double eta0 = 11.0 * d, eta1 = 0.5;
    ScalarField U1 = zoo::field(
        "U1", [rho](const Vec& x) { return rho * (x.array().square() - 1.0).square().sum() / 4.0; },
        [rho](const Vec& x) { return Vec(rho * (x.array().cube() - x.array()).matrix()); },
        [rho](const Vec& x) { return Mat((rho * (3.0 * x.array().square() - 1.0)).matrix().asDiagonal()); },
        eps * eta1, eps * rho * eta0 / 2.0);
    e.lyapunov.push_back({U1,
                          [=](const Vec& x) {
                              return rho * (1.0 - eps * rho / 2.0) *
                                     (x.array().cube() - x.array()).matrix().squaredNorm();
                          },
                          "U1 = rho Phi, Phi(x) = sum (x_i^2 - 1)^2 / 4"});
    e.box = box(Vec::Constant(d, -2.0), Vec::Constant(d, 2.0));
    e.default_x = Vec::Constant(d, 0.5);
    e.default_y = Vec::Constant(d, 0.6);
    e.default_T = 0.5;
}

void build_sir(ZooEntry& e) {
    const Params& p = e.params;
    const double a = get(p, "alpha"), beta = get(p, "beta"), gamma = get(p, "gamma"), delta = get(p, "delta");
    const double rho = get(p, "rho");
    require(a > 0.0 && beta > 0.0 && gamma > 0.0 && delta > 0.0, "alpha, beta, gamma, delta > 0");
    SdeModel& m = e.model;
    m.dim_state = 3;
    m.dim_noise = 1;
    m.domain = DomainSpec::positive_orthant();
    m.drift = [=](const Vec& x) {
        const double inf = a * x(0) * x(1);
        return vec({-inf - delta * x(0) + delta, inf - (gamma + delta) * x(1), gamma * x(1) - delta * x(2)});
    };
    m.drift_jacobian = [=](const Vec& x) {
        Mat J(3, 3);
        J << -a * x(1) - delta, -a * x(0), 0.0, a * x(1), a * x(0) - (gamma + delta), 0.0, 0.0, gamma, -delta;
        return J;
    };
    m.diffusion = [=](const Vec& x) { return col(vec({-beta * x(0) * x(1), beta * x(0) * x(1), 0.0})); };
    m.diffusion_directional = [=](const Vec& x, const Vec& v) {
        const double dd = beta * (x(1) * v(0) + x(0) * v(1));
        return col(vec({-dd, dd, 0.0}));
    };
    e.lyapunov.push_back({zoo::field(
                              "U", [=](const Vec& x) { return rho * (x(0) + x(1) - 1.0); },
                              [=](const Vec&) { return vec({rho, rho, 0.0}); },
                              [](const Vec&) { return Mat(Mat::Zero(3, 3)); }, -delta, 0.0),
                          nullptr, "U = rho (x1 + x2 - 1), G U <= -delta U"});
    e.lyapunov.push_back({zoo::sir_quadratic("U2", rho, delta, gamma), nullptr, "U = rho (x1 + x2 - 1)^2"});
    e.box = box(vec({0.01, 0.01, 0.01}), vec({1.0, 1.0, 1.0}));
    e.default_x = vec({0.6, 0.3, 0.1});
    e.default_y = vec({0.55, 0.35, 0.1});
    e.default_T = 0.5;
}

void build_psychology(ZooEntry& e) {
    const Params& p = e.params;
    const double a = get(p, "alpha"), delta = get(p, "delta"), beta = get(p, "beta"), rho = get(p, "rho");
    const double lp = get(p, "lyap_p");
    require(a > 0.0 && delta > 0.0, "alpha, delta > 0");
    require(lp >= 1.0, "lyap_p >= 1");
    SdeModel& m = e.model;
    m.dim_state = 2;
    m.dim_noise = 1;
    m.domain = DomainSpec::all_space();
    const double b2 = beta * beta;
    m.drift = [=](const Vec& x) {
        const double k = delta + 4.0 * a * x(0);
        return vec({x(1) * x(1) * k - b2 * x(0) / 2.0, -x(0) * x(1) * k - b2 * x(1) / 2.0});
    };
    m.drift_jacobian = [=](const Vec& x) {
        Mat J(2, 2);
        J << 4.0 * a * x(1) * x(1) - b2 / 2.0, 2.0 * x(1) * (delta + 4.0 * a * x(0)),
            -x(1) * (delta + 8.0 * a * x(0)), -x(0) * (delta + 4.0 * a * x(0)) - b2 / 2.0;
        return J;
    };
    m.diffusion = [=](const Vec& x) { return col(vec({-beta * x(1), beta * x(0)})); };
    m.diffusion_directional = [=](const Vec&, const Vec& v) { return col(vec({-beta * v(1), beta * v(0)})); };
    ScalarField U = zoo::field(
        "U", [=](const Vec& x) { return rho * std::pow(x.squaredNorm(), lp); },
        [=](const Vec& x) { return Vec(2.0 * lp * rho * std::pow(x.squaredNorm(), lp - 1.0) * x); },
        [=](const Vec& x) {
            const double n2 = x.squaredNorm();
            Mat H = 2.0 * lp * rho * std::pow(n2, lp - 1.0) * Mat::Identity(2, 2);
            if (lp != 1.0) H += 4.0 * lp * (lp - 1.0) * rho * std::pow(n2, lp - 2.0) * x * x.transpose();
            return H;
        },
        0.0, 0.0);
    e.lyapunov.push_back({U, nullptr, "U = rho ||x||^{2p}, G U + ||sigma^T grad U||^2 / 2 = 0"});
    e.box = box(vec({-1.5, -1.5}), vec({1.5, 1.5}));
    e.default_x = vec({0.5, 0.2});
    e.default_y = vec({0.45, 0.25});
    e.default_T = 0.5;
}

void build_brusselator(ZooEntry& e) {
    const Params& p = e.params;
    const double a = get(p, "alpha"), delta = get(p, "delta"), beta = get(p, "beta");
    const double w1 = get(p, "w1"), w2 = get(p, "w2"), v1 = get(p, "v1"), v2 = get(p, "v2");
    require(a > 0.0 && delta > 0.0, "alpha, delta > 0");
    SdeModel& m = e.model;
    m.dim_state = 2;
    m.dim_noise = 1;
    m.domain = DomainSpec::positive_orthant();
    m.drift = [=](const Vec& x) {
        const double q = x(1) * x(0) * x(0);
        return vec({delta - (a + 1.0) * x(0) + q, a * x(0) - q});
    };
    m.drift_jacobian = [=](const Vec& x) {
        Mat J(2, 2);
        J << -(a + 1.0) + 2.0 * x(0) * x(1), x(0) * x(0), a - 2.0 * x(0) * x(1), -x(0) * x(0);
        return J;
    };
    if (e.variant == "affine") {
        m.diffusion = [=](const Vec& x) { return col(vec({v1 + beta * x(0), v2 + beta * x(1)})); };
        m.diffusion_directional = [=](const Vec&, const Vec& v) { return col(vec({beta * v(0), beta * v(1)})); };
    } else if (e.variant == "bounded") {
        // g(x) = x1 x2 / (1 + ||x||^2): vanishes on the axes, sup g = 1/2, Lip g = 1/2.
        m.diffusion = [=](const Vec& x) {
            const double g = x(0) * x(1) / (1.0 + x.squaredNorm());
            return col(vec({beta * g * w1, beta * g * w2}));
        };
        m.diffusion_directional = [=](const Vec& x, const Vec& v) {
            const double q = 1.0 + x.squaredNorm();
            const double g1 = x(1) * (1.0 - x(0) * x(0) + x(1) * x(1)) / (q * q);
            const double g2 = x(0) * (1.0 + x(0) * x(0) - x(1) * x(1)) / (q * q);
            const double dg = g1 * v(0) + g2 * v(1);
            return col(vec({beta * dg * w1, beta * dg * w2}));
        };
        const auto nz = zoo::brusselator_noise(p);
        e.lyapunov.push_back({zoo::brusselator_field(get(p, "rho"), nz.eta, get(p, "eps_lyap"), delta), nullptr,
                              "U = rho (x1 + x2)^2"});
    } else {
        throw std::invalid_argument("brusselator variant must be 'bounded' or 'affine'");
    }
    e.box = box(vec({0.01, 0.01}), vec({3.0, 3.0}));
    e.default_x = vec({1.0, 1.5});
    e.default_y = vec({1.05, 1.45});
    e.default_T = 0.1;
}

void build_volatility(ZooEntry& e) {
    const Params& p = e.params;
    const double kappa = get(p, "kappa"), c = get(p, "c"), delta = get(p, "delta"), gamma = get(p, "gamma");
    const double alpha = get(p, "alpha"), a = get(p, "a"), beta = get(p, "beta"), b = get(p, "b");
    const double eta = get(p, "eta"), mp = get(p, "moment_p");
    require(beta > 0.0, "beta > 0");
    require(kappa >= 0.0 && alpha >= 0.0, "kappa, alpha >= 0");
    require(b >= 0.0, "b >= 0");
    require(eta > 0.0, "eta > 0");
    SdeModel& m = e.model;
    m.dim_state = 1;
    m.dim_noise = 1;
    m.domain = DomainSpec::positive_orthant();
    auto mu = [=](double x) {
        return kappa * std::pow(x, -c) + delta + gamma * x - alpha * std::pow(x, a);
    };
    auto dmu = [=](double x) {
        return -c * kappa * std::pow(x, -c - 1.0) + gamma - a * alpha * std::pow(x, a - 1.0);
    };
    m.drift = [=](const Vec& x) { return vec({mu(x(0))}); };
    m.drift_jacobian = [=](const Vec& x) { return Mat(Mat::Constant(1, 1, dmu(x(0)))); };
    m.diffusion = [=](const Vec& x) { return Mat(Mat::Constant(1, 1, beta * std::pow(x(0), b))); };
    m.diffusion_directional = [=](const Vec& x, const Vec& v) {
        return Mat(Mat::Constant(1, 1, b * beta * std::pow(x(0), b - 1.0) * v(0)));
    };
    if (b != 1.0) {
        ScalarTransform tr;
        const double k = 1.0 - b;
        tr.fwd = [k](double x) { return std::pow(x, k); };
        tr.inv = [k](double y) { return std::pow(y, 1.0 / k); };
        tr.drift = [=](double y) {
            const double x = std::pow(y, 1.0 / k);
            return k * (std::pow(x, -b) * mu(x) - 0.5 * b * beta * beta * std::pow(x, b - 1.0));
        };
        tr.drift_deriv = [=](double y) {
            const double x = std::pow(y, 1.0 / k);
            return -b * mu(x) / x + dmu(x) + 0.5 * b * k * beta * beta * std::pow(x, 2.0 * b - 2.0);
        };
        tr.diffusion = k * beta;
        tr.y_lower = 0.0;
        tr.y_upper = kInf;
        tr.reflect = false;
        const auto deriv = tr.drift_deriv;
        tr.safe_range = [deriv](double dt) { return zoo::safe_interval(deriv, 0.0, kInf, dt, 1e-12); };
        m.transform = tr;
        e.scheme = Scheme::transformed;
    }
    const double ratio = volatility_moment_ratio(p, mp, eta);
    require(std::isfinite(ratio), "sup G U_p / U_p finite for the chosen moment_p");
    // Tiny inflation so that grid points never exceed the computed sup by rounding.
    const double alpha_U = ratio + 1e-12 * (1.0 + std::abs(ratio));
    e.lyapunov.push_back({zoo::field(
                              "U_p", [=](const Vec& x) { return eta + std::pow(x(0), mp); },
                              [=](const Vec& x) { return vec({mp * std::pow(x(0), mp - 1.0)}); },
                              [=](const Vec& x) {
                                  return Mat(Mat::Constant(1, 1, mp * (mp - 1.0) * std::pow(x(0), mp - 2.0)));
                              },
                              alpha_U, 0.0),
                          nullptr, "U_p(u) = eta + u^p, alpha = sup G U_p / U_p", true});
    if (b != 1.0) {
        e.distance = power_distance(power_map(1, 1.0 - b), 2.0);
        e.distance.name = "|x^{1-b} - y^{1-b}|^2";
    }
    e.box = box(vec({0.05}), vec({3.0}));
    e.default_x = vec({1.0});
    e.default_y = vec({1.2});
    e.default_T = 1.0;
}

PhiMap arcsin_sqrt_map() {
    PhiMap m;
    m.k = 1;
    m.value = [](const Vec& x) { return vec({std::asin(std::sqrt(x(0)))}); };
    m.jacobian = [](const Vec& x) { return Mat(Mat::Constant(1, 1, 0.5 / std::sqrt(x(0) * (1.0 - x(0))))); };
    m.hessians = [](const Vec& x) {
        const double q = x(0) * (1.0 - x(0));
        return std::vector<Mat>{Mat::Constant(1, 1, (2.0 * x(0) - 1.0) / (4.0 * std::pow(q, 1.5)))};
    };
    return m;
}

void build_wright_fisher(ZooEntry& e) {
    const Params& p = e.params;
    const double beta = get(p, "beta"), r0 = get(p, "rho0"), r1 = get(p, "rho1"), s = get(p, "s");
    require(beta > 0.0, "beta > 0");
    require(r0 >= 0.0 && r1 >= 0.0, "rho0, rho1 >= 0");
    SdeModel& m = e.model;
    m.dim_state = 1;
    m.dim_noise = 1;
    m.domain = DomainSpec::unit_interval();
    m.drift = [=](const Vec& x) { return vec({r0 * (1.0 - x(0)) - r1 * x(0) + s * x(0) * (1.0 - x(0))}); };
    m.drift_jacobian = [=](const Vec& x) { return Mat(Mat::Constant(1, 1, -r0 - r1 + s * (1.0 - 2.0 * x(0)))); };
    m.diffusion = [=](const Vec& x) { return Mat(Mat::Constant(1, 1, std::sqrt(beta * x(0) * (1.0 - x(0))))); };
    m.diffusion_directional = [=](const Vec& x, const Vec& v) {
        const double q = x(0) * (1.0 - x(0));
        return Mat(Mat::Constant(1, 1, beta * (1.0 - 2.0 * x(0)) / (2.0 * std::sqrt(beta * q)) * v(0)));
    };
    // Z = arcsin(sqrt(X)) has drift f(Z) / 2 and diffusion sqrt(beta) / 2.
    auto f = [=](double z) {
        return (r0 - beta / 4.0) / std::tan(z) - (r1 - beta / 4.0) * std::tan(z) + 0.5 * s * std::sin(2.0 * z);
    };
    auto df = [=](double z) {
        const double sn = std::sin(z), cs = std::cos(z);
        return -(r0 - beta / 4.0) / (sn * sn) - (r1 - beta / 4.0) / (cs * cs) + s * std::cos(2.0 * z);
    };
    ScalarTransform tr;
    tr.fwd = [](double x) { return std::asin(std::sqrt(x)); };
    tr.inv = [](double z) { return std::pow(std::sin(z), 2); };
    tr.drift = [f](double z) { return f(z) / 2.0; };
    tr.drift_deriv = [df](double z) { return df(z) / 2.0; };
    tr.diffusion = std::sqrt(beta) / 2.0;
    tr.y_lower = 0.0;
    tr.y_upper = std::numbers::pi / 2.0;
    tr.reflect = true;
    const auto deriv = tr.drift_deriv;
    tr.safe_range = [deriv](double dt) {
        return zoo::safe_interval(deriv, 0.0, std::numbers::pi / 2.0, dt, 1e-12);
    };
    m.transform = tr;
    e.scheme = Scheme::reflected_transformed;
    e.distance = power_distance(arcsin_sqrt_map(), 2.0);
    e.distance.name = "|arcsin sqrt x - arcsin sqrt y|^2";
    e.box = box(vec({0.05}), vec({0.95}));
    e.default_x = vec({0.3});
    e.default_y = vec({0.4});
    e.default_T = 1.0;
}

void build_rotation(ZooEntry& e) {
    const double rho = get(e.params, "rho");
    require(rho >= 0.0, "rho >= 0");
    SdeModel& m = e.model;
    m.dim_state = 2;
    m.dim_noise = 2;
    m.domain = DomainSpec::all_space();
    Mat R(2, 2);
    R << 0.0, 1.0, -1.0, 0.0;
    m.drift = [R](const Vec& x) { return Vec(x.squaredNorm() * R * x); };
    m.drift_jacobian = [R](const Vec& x) { return Mat(2.0 * R * x * x.transpose() + x.squaredNorm() * R); };
    m.diffusion = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
    m.diffusion_directional = [](const Vec&, const Vec&) { return Mat(Mat::Zero(2, 2)); };
    e.lyapunov.push_back({zoo::quadratic_norm("U", rho, 2, 2.0 * rho, 2.0 * rho), nullptr, "U = rho ||x||^2"});
    e.box = box(vec({-2.0, -2.0}), vec({2.0, 2.0}));
    e.default_x = vec({2.0, 0.0});
    e.default_y = vec({2.1, 0.0});
    e.default_T = 0.5;
}

}  // namespace

ZooEntry build_model(ZooName n, const Params& overrides, const std::string& variant) {
    ZooEntry e;
    e.name = n;
    e.params = default_params(n);
    for (const auto& [k, v] : overrides) {
        if (!e.params.count(k)) throw std::invalid_argument("unknown parameter '" + k + "' for model " + zoo_name(n));
        if (!std::isfinite(v)) throw std::invalid_argument("parameter '" + k + "' must be finite");
        e.params[k] = v;
    }
    e.variant = variant.empty() ? default_variant(n) : variant;
    if ((n == ZooName::van_der_pol || n == ZooName::duffing_vdp) && e.variant != "additive" &&
        e.variant != "linear") {
        throw std::invalid_argument("oscillator variant must be 'additive' or 'linear'");
    }
    if (n != ZooName::van_der_pol && n != ZooName::duffing_vdp && n != ZooName::brusselator &&
        !e.variant.empty()) {
        throw std::invalid_argument("model " + zoo_name(n) + " has no variant '" + e.variant + "'");
    }
    e.model.name = zoo_name(n);
    switch (n) {
        case ZooName::van_der_pol: build_van_der_pol(e); break;
        case ZooName::duffing_vdp: build_duffing(e); break;
        case ZooName::lorenz: build_lorenz(e); break;
        case ZooName::langevin: build_langevin(e); break;
        case ZooName::brownian_dynamics: build_brownian(e); break;
        case ZooName::sir: build_sir(e); break;
        case ZooName::psychology: build_psychology(e); break;
        case ZooName::brusselator: build_brusselator(e); break;
        case ZooName::volatility: build_volatility(e); break;
        case ZooName::wright_fisher: build_wright_fisher(e); break;
        case ZooName::rotation_counterexample: build_rotation(e); break;
    }
    if (!e.distance.value) {
        e.distance = power_distance(identity_map(e.model.dim_state), 2.0);
        e.distance.name = "||x - y||^2";
    }
    return e;
}

BoundQuery default_query(const ZooEntry& e) {
    BoundQuery q;
    q.T = e.default_T;
    q.r = Exponent(2.0);
    q.p = Exponent::infinity();
    q.q0 = Exponent::infinity();
    q.q1 = Exponent(2.0);
    q.theta = 1.0;
    q.x = e.default_x;
    q.y = e.default_y;
    return q;
}

FellerReport feller_boundary(ZooName n, const Params& params) {
    FellerReport rep;
    if (n == ZooName::volatility) {
        Params p = default_params(n);
        for (const auto& [k, v] : params) p[k] = v;
        const double kappa = get(p, "kappa"), delta = get(p, "delta"), beta = get(p, "beta"), b = get(p, "b");
        if (kappa > 0.0) {
            rep.zero_inaccessible = true;
            rep.reason = "kappa > 0";
        } else if (b == 0.5 && 2.0 * delta >= beta * beta) {
            rep.zero_inaccessible = true;
            rep.reason = "b = 1/2 and 2 delta >= beta^2";
        } else if (b > 0.5 && delta > 0.0) {
            rep.zero_inaccessible = true;
            rep.reason = "b > 1/2 and delta > 0";
        } else if (b >= 1.0 && delta >= 0.0) {
            rep.zero_inaccessible = true;
            rep.reason = "b >= 1 and delta >= 0";
        } else {
            rep.reason = "0 is accessible: none of the inaccessibility conditions holds";
        }
        return rep;
    }
    if (n == ZooName::wright_fisher) {
        Params p = default_params(n);
        for (const auto& [k, v] : params) p[k] = v;
        const double beta = get(p, "beta");
        rep.zero_inaccessible = 2.0 * get(p, "rho0") >= beta;
        rep.one_inaccessible = 2.0 * get(p, "rho1") >= beta;
        rep.reason = std::string("0 ") + (rep.zero_inaccessible ? "inaccessible" : "accessible") +
                     " (2 rho0 vs beta), 1 " + (rep.one_inaccessible ? "inaccessible" : "accessible") +
                     " (2 rho1 vs beta)";
        return rep;
    }
    throw std::invalid_argument("feller_boundary: supported for volatility and wright_fisher only");
}

SdeModel counterexample_model(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("counterexample_model: p must lie in (0, 1)");
    const double K = std::sqrt(6.0) / std::sqrt(1.0 - p);
    auto mu = [](double x) {
        if (x < -1.0) return 0.0;
        if (x > 1.0) return 4.0;
        return -x * x * x + 3.0 * x + 2.0;
    };
    auto dmu = [](double x) { return std::abs(x) <= 1.0 ? -3.0 * (x * x - 1.0) : 0.0; };
    // Antiderivative of sqrt(1 - u^2).
    auto A = [](double u) { return 0.5 * (u * std::sqrt(std::max(0.0, 1.0 - u * u)) + std::asin(u)); };
    auto sigma = [=](double x) {
        if (x <= -1.0 || x >= 3.0) return 0.0;
        if (x <= 1.0) return K * (A(x) + std::numbers::pi / 4.0);
        return K * (std::numbers::pi / 2.0 - (A(x - 2.0) + std::numbers::pi / 4.0));
    };
    auto g = [=](double x) {
        if (x < -1.0 || x > 3.0) return 0.0;
        if (x <= 1.0) return K * std::sqrt(std::max(0.0, 1.0 - x * x));
        return -K * std::sqrt(std::max(0.0, 1.0 - (x - 2.0) * (x - 2.0)));
    };
    SdeModel m;
    m.name = "counterexample";
    m.dim_state = 1;
    m.dim_noise = 1;
    m.domain = DomainSpec::all_space();
    m.drift = [mu](const Vec& x) { return vec({mu(x(0))}); };
    m.diffusion = [sigma](const Vec& x) { return Mat(Mat::Constant(1, 1, sigma(x(0)))); };
    m.drift_jacobian = [dmu](const Vec& x) { return Mat(Mat::Constant(1, 1, dmu(x(0)))); };
    m.diffusion_directional = [g](const Vec& x, const Vec& v) { return Mat(Mat::Constant(1, 1, g(x(0)) * v(0))); };
    return m;
}

}  // namespace sdestab
