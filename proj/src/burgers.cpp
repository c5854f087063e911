#include "sdestab/burgers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdestab {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

Vec burgers_nonlinearity(const Vec& a, double c) {
    const auto n = a.size();
    const Eigen::Index M = 2 * n + 2;
    const double s2 = std::sqrt(2.0);
    Vec b = Vec::Zero(n);
    for (Eigen::Index j = 1; j < M; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(M);
        double v = 0.0, dv = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double kk = static_cast<double>(k + 1) * kPi;
            v += a(k) * s2 * std::sin(kk * x);
            dv += a(k) * s2 * kk * std::cos(kk * x);
        }
        const double F = -c * v * dv;
        for (Eigen::Index k = 0; k < n; ++k) {
            b(k) += F * s2 * std::sin(static_cast<double>(k + 1) * kPi * x);
        }
    }
    return b / static_cast<double>(M);
}

double energy_residual(const Vec& a, double c) { return std::abs(a.dot(burgers_nonlinearity(a, c))); }

GalerkinModel galerkin_model(int n, double c, const NoiseSpec& noise) {
    if (n < 1) throw std::invalid_argument("galerkin_model: n must be at least 1");
    if (!(noise.eta > 0.0)) throw std::invalid_argument("galerkin_model: eta must be positive");
    if (noise.lip < 0.0) throw std::invalid_argument("galerkin_model: negative Lipschitz constant");
    GalerkinModel g;
    g.n_modes = n;
    g.c = c;
    g.noise_bound = noise.eta;
    g.lip_noise = noise.lip;
    g.eigvals.resize(n);
    for (int k = 0; k < n; ++k) g.eigvals(k) = std::pow((k + 1) * kPi, 2);

    Vec probe(n);
    for (int k = 0; k < n; ++k) probe(k) = std::cos(1.3 * k + 0.7) / (k + 1);
    const double res = energy_residual(probe, c);
    if (res > 1e-8) {
        throw std::invalid_argument("galerkin_model: energy identity violated by " + std::to_string(res));
    }

    SdeModel& m = g.model;
    m.name = "burgers_galerkin_" + std::to_string(n);
    m.dim_state = n;
    m.dim_noise = n;
    m.domain = DomainSpec::all_space();
    const Vec lam = g.eigvals;
    m.drift = [lam, c](const Vec& a) { return Vec(-lam.cwiseProduct(a) + burgers_nonlinearity(a, c)); };
    if (noise.custom) {
        m.diffusion = noise.custom;
    } else {
        Vec w(n);
        for (int k = 0; k < n; ++k) w(k) = std::sqrt(6.0 * noise.eta) / (kPi * (k + 1));
        m.diffusion = [w](const Vec&) { return Mat(w.asDiagonal()); };
        m.diffusion_directional = [n](const Vec&, const Vec&) { return Mat(Mat::Zero(n, n)); };
    }
    return g;
}

BoundCertificate burgers_certificate(const GalerkinModel& m, const BoundQuery& query) {
    const Exponent& r = query.r;
    const Exponent& p = query.p;
    const Exponent& q = query.q1;
    if (r.is_inf() || !(r.value() > 2.0)) throw std::invalid_argument("burgers_certificate: r must lie in (2, inf)");
    if (p.is_inf() || q.is_inf() || !(p.value() > r.value()) || !(q.value() > r.value())) {
        throw std::invalid_argument("burgers_certificate: p and q must lie in (r, inf)");
    }
    if (std::abs(p.reciprocal() + q.reciprocal() - r.reciprocal()) > 1e-12) {
        throw std::invalid_argument("burgers_certificate: 1/p + 1/q must equal 1/r");
    }
    if (!query.q0.is_inf()) throw std::invalid_argument("burgers_certificate: q0 must be infinite");
    const auto n = static_cast<Eigen::Index>(m.n_modes);
    if (query.x.size() != n || query.y.size() != n) {
        throw std::invalid_argument("burgers_certificate: x and y must have n_modes coefficients");
    }
    if (!(query.T > 0.0)) throw std::invalid_argument("burgers_certificate: T must be positive");
    const double pv = p.value(), qv = q.value(), T = query.T;
    const double eta = m.noise_bound, c = m.c, s = m.lip_noise;
    const double dist = (query.x - query.y).norm();
    const double lv = std::log(dist) - 0.5 * std::log1p(-2.0 / pv) +
                      std::pow(c, 4) * eta * eta * qv * qv * T / (128.0 * kPi * kPi) + (pv - 1.0) * T * s * s / 2.0 +
                      kPi * T / (2.0 * qv) + kPi * (query.x.squaredNorm() + query.y.squaredNorm()) / (4.0 * eta * qv);
    return make_certificate(lv, TheoremKind::ModelSpecific, query,
                            {{"c", c}, {"eta", eta}, {"lip", s}, {"p", pv}, {"q", qv}}, "burgers");
}

}  // namespace sdestab
