#include "sdestab/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace sdestab {

namespace {

constexpr double kZeroV = 1e-300;

void check_finite(double v, const std::string& term) {
    if (!std::isfinite(v)) throw std::domain_error("operator evaluation: non-finite " + term);
}

void check_finite(const RowVec& v, const std::string& term) {
    if (!v.allFinite()) throw std::domain_error("operator evaluation: non-finite " + term);
}

}  // namespace

OperatorValues apply_operators(const SdeModel& model, const ScalarField& field, const Vec& x) {
    if (!model.domain.contains(x)) throw std::invalid_argument("apply_operators: point outside the domain");
    const Vec mu = model.drift(x);
    const Mat sg = model.diffusion(x);
    const Vec g = field.gradient(x);
    const Mat H = field.hessian(x);
    OperatorValues out;
    const double drift_part = g.dot(mu);
    check_finite(drift_part, "drift term grad U . mu");
    const double second = 0.5 * (sg.transpose() * H * sg).trace();
    check_finite(second, "second-order term tr(sigma sigma^T Hess U)/2");
    out.gen = drift_part + second;
    out.noise_row = g.transpose() * sg;
    check_finite(out.noise_row, "noise row grad U^T sigma");
    return out;
}

OperatorValues apply_extended(const SdeModel& model, const PairField& V, const Vec& x, const Vec& y) {
    if (!model.domain.contains(x) || !model.domain.contains(y)) {
        throw std::invalid_argument("apply_extended: point outside the domain");
    }
    const Vec mx = model.drift(x), my = model.drift(y);
    const Mat sx = model.diffusion(x), sy = model.diffusion(y);
    const Vec vx = V.dx(x, y), vy = V.dy(x, y);
    const Mat vxx = V.dxx(x, y), vxy = V.dxy(x, y), vyy = V.dyy(x, y);

    OperatorValues out;
    const double first = vx.dot(mx) + vy.dot(my);
    check_finite(first, "first-order terms");
    const double sxx = 0.5 * (sx.transpose() * vxx * sx).trace();
    const double sxy = (sx.transpose() * vxy * sy).trace();
    const double syy = 0.5 * (sy.transpose() * vyy * sy).trace();
    check_finite(sxx, "xx second-order term");
    check_finite(sxy, "xy second-order term");
    check_finite(syy, "yy second-order term");
    out.extgen = first + sxx + sxy + syy;
    out.extnoise_row = vx.transpose() * sx + vy.transpose() * sy;
    check_finite(out.extnoise_row, "extended noise row");

    const double v = V.value(x, y);
    check_finite(v, "V");
    if (std::abs(v) < kZeroV) {
        out.ratio_gen = 0.0;
        out.ratio_noise_sq = 0.0;
    } else {
        out.ratio_gen = out.extgen / v;
        out.ratio_noise_sq = out.extnoise_row.squaredNorm() / (v * v);
    }
    return out;
}

PhiMap identity_map(int d) {
    PhiMap m;
    m.k = d;
    m.value = [](const Vec& x) { return x; };
    m.jacobian = [d](const Vec&) { return Mat::Identity(d, d); };
    m.hessians = [d](const Vec&) { return std::vector<Mat>(d, Mat::Zero(d, d)); };
    return m;
}

PhiMap power_map(int d, double q) {
    PhiMap m;
    m.k = d;
    m.value = [q](const Vec& x) { return Vec(x.array().pow(q)); };
    m.jacobian = [q](const Vec& x) {
        return Mat((q * x.array().pow(q - 1.0)).matrix().asDiagonal());
    };
    m.hessians = [d, q](const Vec& x) {
        std::vector<Mat> hs(d, Mat::Zero(d, d));
        for (int l = 0; l < d; ++l) hs[l](l, l) = q * (q - 1.0) * std::pow(x(l), q - 2.0);
        return hs;
    };
    return m;
}

std::pair<double, double> power_norm_ratios(const SdeModel& model, const PhiMap& phi, double p, const Vec& x,
                                            const Vec& y) {
    const Vec D = phi.value(x) - phi.value(y);
    const double n2 = D.squaredNorm();
    if (!(n2 > 0.0)) throw std::domain_error("power_norm_ratios: Phi(x) = Phi(y)");
    const Mat Jx = phi.jacobian(x), Jy = phi.jacobian(y);
    const Vec mx = model.drift(x), my = model.drift(y);
    const Mat sx = model.diffusion(x), sy = model.diffusion(y);
    const auto Hx = phi.hessians(x), Hy = phi.hessians(y);

    const Mat dsig = Jx * sx - Jy * sy;  // k x m
    const double noise_sum = (D.transpose() * dsig).squaredNorm();
    const double ratio_noise_sq = p * p * noise_sum / (n2 * n2);

    // sum_i <D, Phi''(x)(sigma_i, sigma_i) - Phi''(y)(sigma_i, sigma_i)>
    double curv = 0.0;
    for (int l = 0; l < phi.k; ++l) {
        curv += D(l) * ((sx.transpose() * Hx[l] * sx).trace() - (sy.transpose() * Hy[l] * sy).trace());
    }
    const double ratio_gen = p * D.dot(Jx * mx - Jy * my) / n2 + (p - 2.0) / (2.0 * p) * ratio_noise_sq +
                             p * curv / (2.0 * n2) + p * dsig.squaredNorm() / (2.0 * n2);
    return {ratio_gen, ratio_noise_sq};
}

PairField power_distance(const PhiMap& phi, double p) {
    PairField V;
    V.name = "power_distance";
    V.value = [phi, p](const Vec& x, const Vec& y) {
        return std::pow((phi.value(x) - phi.value(y)).norm(), p);
    };
    // c1 = p n^{p-2}, c2 = p (p-2) n^{p-4}
    auto coeffs = [p](double n) {
        // On the diagonal the c2 term is c2 a a^T with a = 0, of order n^{p-2}.
        if (n == 0.0 && p >= 2.0) return std::pair<double, double>{p == 2.0 ? 2.0 : 0.0, 0.0};
        return std::pair<double, double>{p * std::pow(n, p - 2.0), p * (p - 2.0) * std::pow(n, p - 4.0)};
    };
    V.dx = [phi, coeffs](const Vec& x, const Vec& y) {
        const Vec D = phi.value(x) - phi.value(y);
        return Vec(coeffs(D.norm()).first * phi.jacobian(x).transpose() * D);
    };
    V.dy = [phi, coeffs](const Vec& x, const Vec& y) {
        const Vec D = phi.value(x) - phi.value(y);
        return Vec(-coeffs(D.norm()).first * phi.jacobian(y).transpose() * D);
    };
    V.dxx = [phi, coeffs](const Vec& x, const Vec& y) {
        const Vec D = phi.value(x) - phi.value(y);
        const auto [c1, c2] = coeffs(D.norm());
        const Mat J = phi.jacobian(x);
        const auto H = phi.hessians(x);
        Mat curv = Mat::Zero(J.cols(), J.cols());
        for (int l = 0; l < phi.k; ++l) curv += D(l) * H[l];
        const Vec a = J.transpose() * D;
        return Mat(c1 * (J.transpose() * J + curv) + c2 * a * a.transpose());
    };
    V.dxy = [phi, coeffs](const Vec& x, const Vec& y) {
        const Vec D = phi.value(x) - phi.value(y);
        const auto [c1, c2] = coeffs(D.norm());
        const Mat Jx = phi.jacobian(x), Jy = phi.jacobian(y);
        const Vec a = Jx.transpose() * D, b = Jy.transpose() * D;
        return Mat(-c1 * Jx.transpose() * Jy - c2 * a * b.transpose());
    };
    V.dyy = [phi, coeffs](const Vec& x, const Vec& y) {
        const Vec D = phi.value(x) - phi.value(y);
        const auto [c1, c2] = coeffs(D.norm());
        const Mat J = phi.jacobian(y);
        const auto H = phi.hessians(y);
        Mat curv = Mat::Zero(J.cols(), J.cols());
        for (int l = 0; l < phi.k; ++l) curv += D(l) * H[l];
        const Vec b = J.transpose() * D;
        return Mat(c1 * (J.transpose() * J - curv) + c2 * b * b.transpose());
    };
    V.nonnegative = true;
    V.zero_set_note = p >= 2.0 ? "V^{-1}(0) is contained in the zero set of the extended generator"
                               : "not asserted: V is not C^2 on the diagonal";
    return V;
}

TwoPointTerms two_point_terms(const SdeModel& model, const Vec& x, const Vec& y) {
    const Vec D = x - y;
    const double n2 = D.squaredNorm();
    if (!(n2 > 0.0)) return {};
    const Mat ds = model.diffusion(x) - model.diffusion(y);
    TwoPointTerms t;
    t.drift = (D.dot(model.drift(x) - model.drift(y)) + 0.5 * ds.squaredNorm()) / n2;
    t.noise = (D.transpose() * ds).squaredNorm() / (n2 * n2);
    return t;
}

}  // namespace sdestab
