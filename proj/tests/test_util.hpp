#pragma once

#include "sdestab/core.hpp"
#include "sdestab/modelzoo.hpp"

#include <random>

namespace testutil {

using sdestab::Mat;
using sdestab::Vec;

// 1-d model dX = (a X + a0) dt + (b X + b0) dW.
inline sdestab::SdeModel affine_1d(double a, double a0, double b, double b0) {
    sdestab::SdeModel m;
    m.name = "affine";
    m.drift = [=](const Vec& x) { return Vec(Vec::Constant(1, a * x(0) + a0)); };
    m.diffusion = [=](const Vec& x) { return Mat(Mat::Constant(1, 1, b * x(0) + b0)); };
    m.drift_jacobian = [=](const Vec&) { return Mat(Mat::Constant(1, 1, a)); };
    m.diffusion_directional = [=](const Vec&, const Vec& v) { return Mat(Mat::Constant(1, 1, b * v(0))); };
    return m;
}

inline sdestab::ScalarField quadratic(double rho, int d, double alpha = 0.0, double beta = 0.0) {
    sdestab::ScalarField f;
    f.name = "quad";
    f.value = [rho](const Vec& x) { return rho * x.squaredNorm(); };
    f.gradient = [rho](const Vec& x) { return Vec(2.0 * rho * x); };
    f.hessian = [rho, d](const Vec&) { return Mat(2.0 * rho * Mat::Identity(d, d)); };
    f.alpha = alpha;
    f.beta = beta;
    return f;
}

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline Vec uniform_in(const sdestab::Box& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec x(b.lo.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = b.lo(i) + (b.hi(i) - b.lo(i)) * u(rng);
    return x;
}

// Central-difference generator of U: grad U . mu + tr(sigma sigma^T Hess U) / 2,
// with both derivatives taken from U's value only.
inline double fd_generator(const sdestab::SdeModel& m, const std::function<double(const Vec&)>& U, const Vec& x,
                           double h) {
    const auto d = x.size();
    const Vec mu = m.drift(x);
    const Mat s = m.diffusion(x);
    const Mat a = s * s.transpose();
    double g = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e(i) = h;
        g += mu(i) * (U(x + e) - U(x - e)) / (2.0 * h);
        for (Eigen::Index j = 0; j < d; ++j) {
            Vec f = Vec::Zero(d);
            f(j) = h;
            const double hij = (U(x + e + f) - U(x + e - f) - U(x - e + f) + U(x - e - f)) / (4.0 * h * h);
            g += 0.5 * a(i, j) * hij;
        }
    }
    return g;
}

}  // namespace testutil
