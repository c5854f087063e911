#include "sdestab/core.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sdestab {

Exponent::Exponent(double v) : v_(v) {
    if (std::isinf(v) && v > 0) {
        inf_ = true;
        return;
    }
    if (!(v > 0.0)) {
        throw std::invalid_argument("exponent must lie in (0, inf]");
    }
}

Exponent Exponent::infinity() {
    Exponent e;
    e.inf_ = true;
    e.v_ = kInf;
    return e;
}

std::string Exponent::str() const {
    if (inf_) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v_);
    return buf;
}

DomainSpec DomainSpec::all_space() { return DomainSpec{}; }

DomainSpec DomainSpec::positive_orthant(double margin) {
    DomainSpec d;
    d.kind = DomainKind::positive_orthant;
    d.margin = margin;
    return d;
}

DomainSpec DomainSpec::open_box(Vec lower, Vec upper, double margin) {
    if (lower.size() != upper.size()) throw std::invalid_argument("open_box: bound size mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower(i) < upper(i))) throw std::invalid_argument("open_box: empty box");
    }
    DomainSpec d;
    d.kind = DomainKind::open_box;
    d.lower = std::move(lower);
    d.upper = std::move(upper);
    d.margin = margin;
    return d;
}

DomainSpec DomainSpec::unit_interval(double margin) {
    DomainSpec d;
    d.kind = DomainKind::unit_interval_interior;
    d.lower = Vec::Zero(1);
    d.upper = Vec::Ones(1);
    d.margin = margin;
    return d;
}

DomainSpec DomainSpec::simplex_like(double margin) {
    DomainSpec d;
    d.kind = DomainKind::simplex_like;
    d.margin = margin;
    return d;
}

bool DomainSpec::contains(const Vec& x) const {
    if (!all_finite(x)) return false;
    switch (kind) {
        case DomainKind::all_space:
            return true;
        case DomainKind::positive_orthant:
            return (x.array() > margin).all();
        case DomainKind::open_box:
            if (x.size() != lower.size()) return false;
            return ((x - lower).array() > margin).all() && ((upper - x).array() > margin).all();
        case DomainKind::unit_interval_interior:
            return (x.array() > margin).all() && ((1.0 - x.array()) > margin).all();
        case DomainKind::simplex_like:
            // Positive coordinates with sum below 1.
            return (x.array() > margin).all() && (1.0 - x.sum()) > margin;
    }
    return false;
}

std::string DomainSpec::describe() const {
    switch (kind) {
        case DomainKind::all_space: return "all_space";
        case DomainKind::positive_orthant: return "positive_orthant";
        case DomainKind::open_box: return "open_box";
        case DomainKind::unit_interval_interior: return "unit_interval_interior";
        case DomainKind::simplex_like: return "simplex_like";
    }
    return "unknown";
}

void BoundQuery::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("BoundQuery: horizon must be finite and > 0");
    const double lhs = r.reciprocal();
    const double rhs = p.reciprocal() + q0.reciprocal() + q1.reciprocal();
    if (std::abs(lhs - rhs) > 1e-12) {
        throw std::invalid_argument("BoundQuery: 1/r = 1/p + 1/q0 + 1/q1 violated (" + r.str() + ", " +
                                    p.str() + ", " + q0.str() + ", " + q1.str() + ")");
    }
    if (x.size() != y.size()) throw std::invalid_argument("BoundQuery: x and y differ in dimension");
}

void BoundQuery::validate_uniform() const {
    validate();
    if (!(theta > 0.0) || (!p.is_inf() && theta >= p.value())) {
        throw std::invalid_argument("BoundQuery: theta must lie in (0, p)");
    }
    if (!p.is_inf() && rho_aux.value() < p.value()) {
        throw std::invalid_argument("BoundQuery: rho_aux must lie in [p, inf]");
    }
}

std::string theorem_name(TheoremKind k) {
    switch (k) {
        case TheoremKind::ThmUV: return "ThmUV";
        case TheoremKind::ThmUV2: return "ThmUV2";
        case TheoremKind::CorUV2: return "CorUV2";
        case TheoremKind::CorUV3: return "CorUV3";
        case TheoremKind::ExpMoment: return "ExpMoment";
        case TheoremKind::Martingale: return "Martingale";
        case TheoremKind::ModelSpecific: return "ModelSpecific";
    }
    return "unknown";
}

BoundCertificate make_certificate(double log_value, TheoremKind kind, const BoundQuery& q,
                                  std::map<std::string, double> constants, std::string model) {
    if (std::isnan(log_value)) throw std::domain_error("certificate: log value is NaN");
    BoundCertificate c;
    c.log_value = log_value;
    c.value = std::exp(log_value);
    c.overflow = std::isinf(c.value) && log_value > 0;
    c.theorem = kind;
    c.model = std::move(model);
    c.query = q;
    c.constants_used = std::move(constants);
    return c;
}

Scheme parse_scheme(const std::string& s) {
    if (s == "euler_maruyama") return Scheme::euler_maruyama;
    if (s == "transformed") return Scheme::transformed;
    if (s == "reflected_transformed") return Scheme::reflected_transformed;
    throw std::invalid_argument("unknown scheme: " + s);
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::euler_maruyama: return "euler_maruyama";
        case Scheme::transformed: return "transformed";
        case Scheme::reflected_transformed: return "reflected_transformed";
    }
    return "unknown";
}

std::size_t McConfig::steps_for(double T) const {
    if (!(dt > 0.0)) throw std::invalid_argument("McConfig: dt must be > 0");
    const double n = std::round(T / dt);
    if (n < 1.0) throw std::invalid_argument("McConfig: horizon shorter than one step");
    if (std::abs(n * dt - T) > 4.0 * std::numeric_limits<double>::epsilon() * T) {
        throw std::invalid_argument("McConfig: dt does not divide the horizon");
    }
    return static_cast<std::size_t>(n);
}

void McConfig::validate(bool need_ci) const {
    if (n_paths == 0) throw std::invalid_argument("McConfig: n_paths must be positive");
    if (need_ci && n_paths < 2) throw std::invalid_argument("McConfig: a confidence interval needs n_paths >= 2");
    if (!(dt > 0.0)) throw std::invalid_argument("McConfig: dt must be > 0");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("McConfig: ci_level must lie in (0,1)");
    if (substeps < 1) throw std::invalid_argument("McConfig: substeps must be >= 1");
}

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

ValidationReport validate_model(const SdeModel& model, const std::vector<Vec>& probe_points) {
    if (probe_points.empty()) throw std::invalid_argument("validate_model: empty probe list");
    ValidationReport rep;
    rep.pass = true;
    for (const auto& x : probe_points) {
        PointCheck pc;
        pc.point = x;
        pc.in_domain = x.size() == model.dim_state && model.domain.contains(x);
        if (pc.in_domain) {
            Vec mu = model.drift(x);
            Mat sg = model.diffusion(x);
            pc.finite_drift = mu.size() == model.dim_state && all_finite(mu);
            pc.shape_ok = sg.rows() == model.dim_state && sg.cols() == model.dim_noise;
            pc.finite_diffusion = all_finite(sg);
        }
        rep.pass = rep.pass && pc.pass();
        rep.points.push_back(std::move(pc));
    }
    return rep;
}

namespace {

double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / (1.0 + std::abs(analytic));
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::domain_error(std::string("fd_consistency: non-finite ") + what);
}

}  // namespace

double fd_consistency(const ScalarField& field, const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_consistency: h must be > 0");
    const Eigen::Index d = x.size();
    const Vec g = field.gradient(x);
    const Mat H = field.hessian(x);
    require_finite(field.value(x), "value");
    if (!all_finite(g) || !all_finite(H)) throw std::domain_error("fd_consistency: non-finite derivative");
    double err = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const double fp = field.value(xp), fm = field.value(xm);
        require_finite(fp, "value");
        require_finite(fm, "value");
        err = std::max(err, rel_err(g(i), (fp - fm) / (2.0 * h)));
        const Vec gp = field.gradient(xp), gm = field.gradient(xm);
        for (Eigen::Index j = 0; j < d; ++j) {
            err = std::max(err, rel_err(H(j, i), (gp(j) - gm(j)) / (2.0 * h)));
        }
    }
    return err;
}

double fd_consistency(const PairField& field, const Vec& x, const Vec& y, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_consistency: h must be > 0");
    const Eigen::Index d = x.size();
    const Vec gx = field.dx(x, y), gy = field.dy(x, y);
    const Mat Hxx = field.dxx(x, y), Hxy = field.dxy(x, y), Hyy = field.dyy(x, y);
    double err = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        Vec xp = x, xm = x, yp = y, ym = y;
        xp(i) += h;
        xm(i) -= h;
        yp(i) += h;
        ym(i) -= h;
        const double vxp = field.value(xp, y), vxm = field.value(xm, y);
        const double vyp = field.value(x, yp), vym = field.value(x, ym);
        require_finite(vxp, "value");
        require_finite(vxm, "value");
        require_finite(vyp, "value");
        require_finite(vym, "value");
        err = std::max(err, rel_err(gx(i), (vxp - vxm) / (2.0 * h)));
        err = std::max(err, rel_err(gy(i), (vyp - vym) / (2.0 * h)));
        // Column i of the second partials from differences of first partials.
        const Vec dxp = field.dx(xp, y), dxm = field.dx(xm, y);
        const Vec dxyp = field.dx(x, yp), dxym = field.dx(x, ym);
        const Vec dyp = field.dy(x, yp), dym = field.dy(x, ym);
        for (Eigen::Index j = 0; j < d; ++j) {
            err = std::max(err, rel_err(Hxx(j, i), (dxp(j) - dxm(j)) / (2.0 * h)));
            err = std::max(err, rel_err(Hxy(j, i), (dxyp(j) - dxym(j)) / (2.0 * h)));
            err = std::max(err, rel_err(Hyy(j, i), (dyp(j) - dym(j)) / (2.0 * h)));
        }
    }
    return err;
}

}  // namespace sdestab
