#include "sdestab/estimate.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sdestab {

namespace {

double normal_quantile(double ci_level) {
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("ci_level must lie in (0, 1)");
    const boost::math::normal_distribution<double> nd;
    return boost::math::quantile(nd, 0.5 + ci_level / 2.0);
}

// (mean of (s/scale)^p)^{1/p} * scale, avoiding overflow of s^p.
double scaled_lp(const std::vector<double>& s, double p, double scale) {
    if (scale == 0.0) return 0.0;
    double acc = 0.0;
    for (const double v : s) acc += std::pow(v / scale, p);
    return scale * std::pow(acc / static_cast<double>(s.size()), 1.0 / p);
}

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void attach_meta(McEstimate& e, const BoundQuery& q) {
    e.has_meta = true;
    e.T = q.T;
    e.r = q.r;
    e.x = q.x;
    e.y = q.y;
}

}  // namespace

std::string estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::lp: return "lp";
        case EstimatorKind::sup_lp: return "sup_lp";
        case EstimatorKind::exp_moment: return "exp_moment";
        case EstimatorKind::max: return "max";
    }
    return "unknown";
}

McEstimate lp_norm(const std::vector<double>& samples, const Exponent& p, double ci_level,
                   std::uint64_t bootstrap_seed) {
    if (samples.empty()) throw std::invalid_argument("lp_norm: no samples");
    double smax = 0.0;
    for (const double v : samples) {
        if (!(v >= 0.0)) throw std::invalid_argument("lp_norm: samples must be nonnegative");
        smax = std::max(smax, v);
    }
    McEstimate e;
    e.n_effective = samples.size();
    if (p.is_inf()) {
        e.kind = EstimatorKind::max;
        e.point_estimate = e.ci_low = e.ci_high = smax;
        return e;
    }
    e.kind = EstimatorKind::lp;
    const double pv = p.value();
    e.point_estimate = scaled_lp(samples, pv, smax);
    if (std::isinf(smax)) {
        e.overflow = true;
        e.ci_low = e.ci_high = e.point_estimate = kInf;
        return e;
    }
    const double z = normal_quantile(ci_level);
    const std::size_t n = samples.size();
    if (smax == 0.0 || n < 2) {
        e.ci_low = e.ci_high = e.point_estimate;
        return e;
    }
    if (pv >= 8.0) {
        // High moments are strongly skewed; percentile bootstrap instead of the normal interval.
        const int B = 200;
        std::vector<double> boot(B);
        std::vector<double> res(n);
        for (int b = 0; b < B; ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint64_t h = mix64(bootstrap_seed ^ mix64(static_cast<std::uint64_t>(b) * n + i));
                res[i] = samples[h % n];
            }
            boot[b] = scaled_lp(res, pv, smax);
        }
        std::sort(boot.begin(), boot.end());
        const double a = (1.0 - ci_level) / 2.0;
        e.ci_low = std::min(quantile_sorted(boot, a), e.point_estimate);
        e.ci_high = std::max(quantile_sorted(boot, 1.0 - a), e.point_estimate);
        e.note = "bootstrap";
        return e;
    }
    // Moments of s / smax, so the variance is computed without overflow.
    double m = 0.0, m2 = 0.0;
    for (const double v : samples) {
        const double u = std::pow(v / smax, pv);
        m += u;
        m2 += u * u;
    }
    m /= static_cast<double>(n);
    const double var = std::max(0.0, (m2 / static_cast<double>(n) - m * m) * static_cast<double>(n) /
                                         static_cast<double>(n - 1));
    const double se = std::sqrt(var / static_cast<double>(n));
    const double lo = std::max(0.0, m - z * se), hi = m + z * se;
    e.ci_low = std::min(smax * std::pow(lo, 1.0 / pv), e.point_estimate);
    e.ci_high = std::max(smax * std::pow(hi, 1.0 / pv), e.point_estimate);
    e.note = "normal";
    return e;
}

LipschitzEstimates empirical_lipschitz(const SdeModel& model, const BoundQuery& query, const McConfig& cfg,
                                       DistanceSpace space) {
    cfg.validate(true);
    const auto stats = run_pairs(model, query.x, query.y, query.T, cfg, space);
    std::vector<double> fin(stats.size()), sup(stats.size());
    std::size_t exited = 0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        fin[i] = stats[i].final_dist;
        sup[i] = stats[i].sup_dist;
        exited += stats[i].exited ? 1 : 0;
    }
    LipschitzEstimates out;
    out.marginal = lp_norm(fin, query.r, cfg.ci_level, cfg.seed);
    out.uniform = lp_norm(sup, query.r, cfg.ci_level, cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    if (out.uniform.kind == EstimatorKind::lp) out.uniform.kind = EstimatorKind::sup_lp;
    const double frac = static_cast<double>(exited) / static_cast<double>(stats.size());
    for (auto* e : {&out.marginal, &out.uniform}) {
        e->stopped_fraction = frac;
        e->unreliable = frac > 0.5;
        attach_meta(*e, query);
    }
    return out;
}

McEstimate exp_moment_estimate(const SdeModel& model, const ScalarField& field, const TimeField& ubar,
                               const Vec& x, double T, const McConfig& cfg) {
    cfg.validate(true);
    if (!model.domain.contains(x)) throw std::invalid_argument("exp_moment_estimate: x outside the domain");
    const std::size_t n = cfg.n_paths;
    std::vector<double> logs(n);
    std::vector<char> stopped(n, 0);
    parallel_for(n, resolve_threads(cfg.threads), [&](std::size_t i) {
        double acc = 0.0;
        double last_t = 0.0;
        Vec last = x;
        const auto exit =
            visit_path(model, x, T, cfg, NoiseSource(cfg.seed, i), [&](std::size_t, double t, const Vec& s) {
                if (t > 0.0 && ubar) acc += std::exp(-field.alpha * last_t) * ubar(last_t, last) * cfg.dt;
                last_t = t;
                last = s;
            });
        stopped[i] = exit.has_value() ? 1 : 0;
        logs[i] = std::exp(-field.alpha * last_t) * field.value(last) + acc;
    });
    McEstimate e;
    e.kind = EstimatorKind::exp_moment;
    e.n_effective = n;
    std::size_t ns = 0;
    double lmax = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
        ns += static_cast<std::size_t>(stopped[i]);
        if (std::isnan(logs[i])) logs[i] = kInf;
        lmax = std::max(lmax, logs[i]);
    }
    e.stopped_fraction = static_cast<double>(ns) / static_cast<double>(n);
    e.unreliable = e.stopped_fraction > 0.5;
    if (std::isinf(lmax) && lmax > 0) {
        e.overflow = true;
        e.point_estimate = e.ci_low = e.ci_high = kInf;
        e.note = "overflow";
        return e;
    }
    double m = 0.0, m2 = 0.0;
    for (const double l : logs) {
        const double u = std::exp(l - lmax);
        m += u;
        m2 += u * u;
    }
    m /= static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (m2 / static_cast<double>(n) - m * m) * static_cast<double>(n) /
                                                 static_cast<double>(n - 1))
                             : 0.0;
    const double se = std::sqrt(var / static_cast<double>(n));
    const double z = normal_quantile(cfg.ci_level);
    const double sc = std::exp(lmax);
    e.point_estimate = sc * m;
    e.ci_low = std::min(sc * std::max(0.0, m - z * se), e.point_estimate);
    e.ci_high = std::max(sc * (m + z * se), e.point_estimate);
    if (std::isinf(e.point_estimate)) e.overflow = true;
    e.has_meta = true;
    e.T = T;
    e.x = x;
    return e;
}

Verdict verify_certificate(const McEstimate& empirical, const BoundCertificate& cert, double slack) {
    if (slack < 0.0) throw std::invalid_argument("verify_certificate: negative slack");
    if (empirical.has_meta) {
        const BoundQuery& q = cert.query;
        auto same_vec = [](const Vec& a, const Vec& b) { return a.size() == b.size() && (a - b).norm() == 0.0; };
        bool ok = empirical.T == q.T;
        if (empirical.kind != EstimatorKind::exp_moment) {
            ok = ok && empirical.r.is_inf() == q.r.is_inf() && empirical.r.value() == q.r.value() &&
                 same_vec(empirical.y, q.y);
        }
        ok = ok && same_vec(empirical.x, q.x);
        if (!ok) throw std::invalid_argument("verify_certificate: estimate and certificate refer to different queries");
    }
    Verdict v;
    v.empirical = empirical.kind == EstimatorKind::max ? empirical.point_estimate : empirical.ci_high;
    v.bound = cert.value * (1.0 + slack);
    v.margin = cert.value - v.empirical;
    v.pass = std::isfinite(v.empirical) && v.empirical <= v.bound;
    std::ostringstream os;
    os.precision(6);
    os << (v.pass ? "pass" : "fail") << ": empirical " << v.empirical << " vs bound " << cert.value;
    if (slack > 0.0) os << " (slack " << slack << ")";
    if (empirical.unreliable) os << " [unreliable: " << empirical.stopped_fraction << " of pairs stopped]";
    v.message = os.str();
    return v;
}

}  // namespace sdestab
