#include "sdestab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sdestab {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr double kHolderTol = 1e-12;
// Roundoff floor for the noise term when it multiplies an infinite coefficient.
constexpr double kNoiseFloor = 1e-20;

std::string point_str(const Vec& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

ScalarBound from_log(double lv) {
    ScalarBound b;
    b.log_value = lv;
    b.value = std::exp(lv);
    b.overflow = std::isinf(b.value) && lv > 0;
    return b;
}

// Golden-section search for the max of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, int iters) {
    double c = b - kGolden * (b - a);
    double d = a + kGolden * (b - a);
    double fc = f(c), fd = f(d);
    for (int k = 0; k < iters; ++k) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGolden * (b - a);
            fd = f(d);
        }
    }
    return std::max({fc, fd, f(0.5 * (a + b))});
}

}  // namespace

LyapunovCheckReport lyapunov_check(const SdeModel& model, const ScalarField& field, const TimeField& ubar,
                                   const std::vector<Vec>& grid, const std::vector<double>& t_grid, double tol,
                                   bool moment_form) {
    if (grid.empty() || t_grid.empty()) throw std::invalid_argument("lyapunov_check: empty grid");
    LyapunovCheckReport rep;
    rep.tolerance = tol;
    for (const double t : t_grid) {
        const double decay = moment_form ? 0.0 : std::exp(-field.alpha * t);
        for (const auto& x : grid) {
            if (!model.domain.contains(x)) {
                throw std::invalid_argument("lyapunov_check: grid point outside the domain " + point_str(x));
            }
            const OperatorValues ov = apply_operators(model, field, x);
            const double ub = ubar ? ubar(t, x) : 0.0;
            const double lhs = ov.gen + 0.5 * decay * ov.noise_row.squaredNorm() + ub;
            const double rhs = field.alpha * field.value(x) + field.beta;
            const double margin = rhs - lhs;
            if (!std::isfinite(margin)) {
                throw std::domain_error("lyapunov_check: non-finite evaluation at " + point_str(x));
            }
            ++rep.grid_size;
            rep.worst_margin = std::min(rep.worst_margin, margin);
            if (margin < -tol && rep.violating_points.size() < 100) {
                rep.violating_points.push_back({t, x, margin});
            }
        }
    }
    rep.pass = rep.worst_margin >= -tol;
    return rep;
}

ScalarBound exp_moment_bound_rhs(const ScalarField& field, const Vec& x) { return from_log(field.value(x)); }

ScalarBound exp_moment_bound_shifted(const ScalarField& field, const Vec& x, double T) {
    return from_log(field.value(x) + time_integral(field.beta, field.alpha, T, 1));
}

double martingale_sup_bound(const Exponent& p, const Exponent& q, double integral_bound) {
    if (!p.is_inf() && p.value() <= 1.0) throw std::invalid_argument("martingale_sup_bound: p must exceed 1");
    if (!q.is_inf() && (p.is_inf() || q.value() < p.value())) {
        throw std::invalid_argument("martingale_sup_bound: q must lie in [p, inf]");
    }
    if (integral_bound < 0.0) throw std::invalid_argument("martingale_sup_bound: negative integral bound");
    const double pref = 1.0 / (1.0 - p.reciprocal());
    const double gap = p.reciprocal() - q.reciprocal();
    if (integral_bound == 0.0) return pref;
    if (gap <= 0.0) return kInf;
    return pref * std::exp(0.5 * (1.0 / gap - 1.0) * integral_bound);
}

double martingale_sup_bound_2p(const Exponent& p, double integral_bound) {
    if (!p.is_inf() && p.value() <= 1.0) throw std::invalid_argument("martingale_sup_bound_2p: p must exceed 1");
    if (integral_bound < 0.0) throw std::invalid_argument("martingale_sup_bound_2p: negative integral bound");
    const double pref = 1.0 / (1.0 - p.reciprocal());
    if (integral_bound == 0.0) return pref;
    if (p.is_inf()) return kInf;
    return pref * std::exp((p.value() - 0.5) * integral_bound);
}

double time_integral(double beta, double alpha, double T, int j) {
    if (j != 0 && j != 1) throw std::invalid_argument("time_integral: j must be 0 or 1");
    if (beta == 0.0) return 0.0;
    const double a = alpha * T;
    if (std::abs(a) < 1e-4) {
        if (j == 1) return beta * T * (1.0 - a / 2.0 + a * a / 6.0 - a * a * a / 24.0);
        return beta * T * (0.5 - a / 6.0 + a * a / 24.0 - a * a * a / 120.0);
    }
    if (j == 1) return beta * (-std::expm1(-a)) / alpha;
    return beta * T * (a + std::expm1(-a)) / (a * a);
}

BoundCertificate thm_uv_bound(const BoundQuery& query, const ThmUVInputs& in) {
    query.validate();
    const double T = query.T;
    const double lv = std::log(in.V_xy) + in.c * T +
                      (2.0 * in.beta0 * T + in.U0x + in.U0y) * query.q0.reciprocal() / 2.0 +
                      (2.0 * in.beta1 * T + in.U1x + in.U1y) * query.q1.reciprocal() / 2.0;
    return make_certificate(lv, TheoremKind::ThmUV, query,
                            {{"c", in.c},
                             {"U0(x)", in.U0x},
                             {"U0(y)", in.U0y},
                             {"U1(x)", in.U1x},
                             {"U1(y)", in.U1y},
                             {"beta0", in.beta0},
                             {"beta1", in.beta1},
                             {"V(x,y)", in.V_xy}});
}

void check_exponents(const BoundSetup& s) {
    double sum0 = 0.0, sum1 = 0.0;
    for (const auto& t : s.terms) {
        if (t.group != 0 && t.group != 1) throw std::invalid_argument("bound setup: group must be 0 or 1");
        if (t.j != 0 && t.j != 1) throw std::invalid_argument("bound setup: j must be 0 or 1");
        if (t.q_limit && !t.q.is_inf()) throw std::invalid_argument("bound setup: q limit needs q = inf");
        if (!s.uniform && t.group != 1) throw std::invalid_argument("bound setup: marginal bounds use group 1 only");
        (t.group == 0 ? sum0 : sum1) += t.q.reciprocal();
    }
    if (s.uniform) {
        if (std::abs(sum0 - s.rho_aux.reciprocal()) > kHolderTol) {
            throw std::invalid_argument("bound setup: sum over group 0 of 1/q must equal 1/rho_aux");
        }
        if (!(s.theta > 0.0) || (!s.p.is_inf() && s.theta >= s.p.value())) {
            throw std::invalid_argument("bound setup: theta must lie in (0, p)");
        }
        if (!s.p.is_inf() && s.rho_aux.value() < s.p.value()) {
            throw std::invalid_argument("bound setup: rho_aux must lie in [p, inf]");
        }
    }
    if (std::abs(s.p.reciprocal() + sum1 - s.r.reciprocal()) > kHolderTol) {
        throw std::invalid_argument("bound setup: 1/p + sum of 1/q must equal 1/r");
    }
}

double setup_log_bound(const BoundSetup& s, double V_xy, const Vec& x, const Vec& y) {
    double lv = std::log(V_xy) + s.c1_int;
    if (s.uniform) {
        if (!s.p.is_inf()) lv += -std::log1p(-s.theta / s.p.value()) / s.theta;
        lv += s.c0_int;
    }
    for (const auto& t : s.terms) {
        const double w = t.weight();
        if (w == 0.0) continue;
        lv += w * time_integral(t.field.beta, t.field.alpha, s.T, t.j);
        lv += w * (t.field.value(x) + t.field.value(y)) / 2.0;
    }
    return lv;
}

std::pair<double, double> setup_condition_margins(const BoundSetup& s, const SdeModel& model, const Vec& v,
                                                  const Vec& w, double t) {
    const TwoPointTerms tp = two_point_terms(model, v, w);
    double rhs0 = s.c0 ? s.c0(t) : 0.0;
    double rhs1 = s.c1 ? s.c1(t) : 0.0;
    for (const auto& term : s.terms) {
        const double wt = term.weight();
        if (wt == 0.0) continue;
        const double decay = std::exp(-term.field.alpha * t);
        double add = 0.0;
        if (term.j == 0) {
            add = wt * (term.field.value(v) + term.field.value(w)) * decay / (2.0 * s.T);
        } else if (term.ubar) {
            add = wt * (term.ubar(v) + term.ubar(w)) * decay / 2.0;
        }
        (term.group == 0 ? rhs0 : rhs1) += add;
    }
    auto scaled_noise = [&](double k) {
        if (std::isinf(k)) return tp.noise > kNoiseFloor ? kInf : 0.0;
        return k * tp.noise;
    };
    if (!s.uniform) {
        const double k = s.p.is_inf() ? kInf : s.p.value() / 2.0 - 1.0;
        const double lhs = tp.drift + scaled_noise(k);
        return {0.0, rhs1 - lhs};
    }
    const double gap = 2.0 * s.p.reciprocal() - 2.0 * s.rho_aux.reciprocal();
    const double k0 = gap > 0.0 ? 1.0 / gap - s.theta / 2.0 : kInf;
    const double lhs0 = scaled_noise(k0);
    const double lhs1 = std::max(0.0, tp.drift + (s.theta / 2.0 - 1.0) * tp.noise);
    return {rhs0 - lhs0, rhs1 - lhs1};
}

BoundCertificate uniform_bound(const BoundQuery& query, const BoundSetup& setup, double V_xy) {
    query.validate_uniform();
    check_exponents(setup);
    if (!(setup.uniform)) throw std::invalid_argument("uniform_bound: setup is marginal");
    const double lv = setup_log_bound(setup, V_xy, query.x, query.y);
    std::map<std::string, double> consts{{"int_c0", setup.c0_int},
                                         {"int_c1", setup.c1_int},
                                         {"theta", setup.theta},
                                         {"V(x,y)", V_xy}};
    for (std::size_t i = 0; i < setup.terms.size(); ++i) {
        const auto& t = setup.terms[i];
        const std::string tag = t.field.name.empty() ? "U" + std::to_string(i) : t.field.name;
        consts[tag + ".alpha"] = t.field.alpha;
        consts[tag + ".beta"] = t.field.beta;
        consts[tag + "(x)"] = t.field.value(query.x);
        consts[tag + "(y)"] = t.field.value(query.y);
        consts[tag + ".weight"] = t.weight();
    }
    return make_certificate(lv, setup.rho_aux.is_inf() ? TheoremKind::CorUV2 : TheoremKind::ThmUV2, query,
                            std::move(consts));
}

BoundCertificate cor_uv3_bound(double c0, double c1, double beta, double c, double eps, const Exponent& r,
                               double T, const Vec& x, const Vec& y) {
    if (!r.is_inf() && r.value() <= 1.0) throw std::invalid_argument("cor_uv3_bound: r must exceed 1");
    const double lv = -0.5 * std::log1p(-r.reciprocal()) + (c0 + c1) * T +
                      (beta * T + c * std::pow(1.0 + x.squaredNorm(), eps) + c * std::pow(1.0 + y.squaredNorm(), eps)) *
                          r.reciprocal() / 2.0;
    BoundQuery q;
    q.T = T;
    q.r = r;
    q.p = r;
    q.q0 = Exponent::infinity();
    q.q1 = Exponent::infinity();
    q.x = x;
    q.y = y;
    return make_certificate(lv, TheoremKind::CorUV3, q,
                            {{"c0", c0}, {"c1", c1}, {"beta", beta}, {"c", c}, {"eps", eps}});
}

SupResult monotonicity_sup(const SdeModel& model, double p, MonotonicityMode mode,
                           const std::vector<std::pair<Vec, Vec>>& samples) {
    if (samples.empty()) throw std::invalid_argument("monotonicity_sup: empty grid");
    SupResult res;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& [a, b] = samples[i];
        double val;
        if (mode == MonotonicityMode::derivative_form) {
            if (!model.drift_jacobian || !model.diffusion_directional) {
                throw std::invalid_argument("monotonicity_sup: model lacks derivative data");
            }
            const Vec v = b / b.norm();
            const Mat sv = model.diffusion_directional(a, v);  // d x m
            val = v.dot(model.drift_jacobian(a) * v) + 0.5 * sv.squaredNorm() +
                  (p / 2.0 - 1.0) * (v.transpose() * sv).squaredNorm();
        } else {
            const TwoPointTerms tp = two_point_terms(model, a, b);
            val = tp.drift + (p / 2.0 - 1.0) * tp.noise;
        }
        if (val > res.value) {
            res.value = val;
            res.argmax = i;
        }
    }
    return res;
}

std::vector<std::pair<Vec, Vec>> matched_pairs(const std::vector<std::pair<Vec, Vec>>& samples, double h) {
    std::vector<std::pair<Vec, Vec>> out;
    out.reserve(samples.size());
    for (const auto& [x, v] : samples) {
        const Vec u = v / v.norm();
        out.emplace_back(x - 0.5 * h * u, x + 0.5 * h * u);
    }
    return out;
}

std::pair<double, double> minmax_theta(const std::vector<std::function<double(double)>>& branches, double r_lo,
                                       double r_hi, bool clip_zero) {
    if (branches.empty() || !(r_lo > 0.0) || !(r_hi > r_lo)) {
        throw std::invalid_argument("minmax_theta: need branches and 0 < r_lo < r_hi");
    }
    auto F = [&](double logr) {
        const double r = std::exp(logr);
        double m = clip_zero ? 0.0 : -kInf;
        for (const auto& b : branches) {
            const double v = b(r);
            if (!std::isfinite(v)) throw std::domain_error("minmax_theta: non-finite branch value");
            m = std::max(m, v);
        }
        return m;
    };
    const double a = std::log(r_lo), b = std::log(r_hi);
    const int n = 400;
    int best = 0;
    double fbest = kInf;
    for (int i = 0; i <= n; ++i) {
        const double f = F(a + (b - a) * i / n);
        if (f < fbest) {
            fbest = f;
            best = i;
        }
    }
    double lo = a + (b - a) * std::max(0, best - 1) / n;
    double hi = a + (b - a) * std::min(n, best + 1) / n;
    auto negF = [&](double lr) { return -F(lr); };
    // Track the argmin alongside the value.
    double c = hi - kGolden * (hi - lo), d = lo + kGolden * (hi - lo);
    double fc = negF(c), fd = negF(d);
    for (int k = 0; k < 200; ++k) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - kGolden * (hi - lo);
            fc = negF(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + kGolden * (hi - lo);
            fd = negF(d);
        }
    }
    double arg = 0.5 * (lo + hi);
    double val = F(arg);
    const double grid_arg = a + (b - a) * best / n;
    if (fbest < val) {
        arg = grid_arg;
        val = fbest;
    }
    return {std::exp(arg), val};
}

double moment_bound_lyapunov(double sup_ratio, double U_at_x, double t) { return U_at_x * std::exp(t * sup_ratio); }

double grid_sup_1d(const std::function<double(double)>& f, double lo, double hi, std::size_t n, bool log_grid) {
    if (!(hi > lo) || n < 2) throw std::invalid_argument("grid_sup_1d: need lo < hi and n >= 2");
    if (log_grid && !(lo > 0.0)) throw std::invalid_argument("grid_sup_1d: log grid needs lo > 0");
    const double a = log_grid ? std::log(lo) : lo;
    const double b = log_grid ? std::log(hi) : hi;
    auto g = [&](double s) { return f(log_grid ? std::exp(s) : s); };
    std::size_t best = 0;
    double fbest = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = g(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
        if (v > fbest) {
            fbest = v;
            best = i;
        }
    }
    const double step = (b - a) / static_cast<double>(n - 1);
    const double l = a + step * static_cast<double>(best > 0 ? best - 1 : 0);
    const double r = a + step * static_cast<double>(std::min(n - 1, best + 1));
    return std::max(fbest, golden_max(g, l, r, 100));
}

}  // namespace sdestab
