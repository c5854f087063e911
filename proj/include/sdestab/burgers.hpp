#pragma once

#include "sdestab/core.hpp"

#include <functional>

namespace sdestab {

// Noise of the Galerkin system in sine coefficients. The default is diagonal
// additive noise with weights w_k^2 = 6 eta / (pi^2 k^2), so that the squared
// Hilbert-Schmidt norm is at most eta. A custom diffusion replaces it; `eta`
// and `lip` must then bound its squared HS norm and its Lipschitz constant.
struct NoiseSpec {
    double eta = 0.1;
    double lip = 0.0;
    std::function<Mat(const Vec&)> custom;  // n x n, optional
};

struct GalerkinModel {
    int n_modes = 1;
    Vec eigvals;  // (k pi)^2
    double c = 1.0;
    double noise_bound = 0.0;  // eta
    double lip_noise = 0.0;    // varsigma
    SdeModel model;
};

// Projected nonlinearity P_n F(v), F(v) = -(c/2) (v^2)' with e_k = sqrt(2) sin(k pi x).
// Evaluated by collocation on the 2n + 1 interior points j / (2n + 2), which is
// exact for the degree-2n products involved.
Vec burgers_nonlinearity(const Vec& a, double c);

// |<a, P_n F(a)>|, zero in exact arithmetic.
double energy_residual(const Vec& a, double c);

// Throws std::invalid_argument for n < 1, eta <= 0 or if the energy identity
// fails beyond 1e-8 on a probe vector.
GalerkinModel galerkin_model(int n, double c, const NoiseSpec& noise = {});

// ||x - y|| / sqrt(1 - 2/p) exp(c^4 eta^2 q^2 T / (128 pi^2) + (p - 1) T lip^2 / 2
//   + pi T / (2 q) + pi (||x||^2 + ||y||^2) / (4 eta q)), with p = query.p, q = query.q1.
// Requires r in (2, inf), p, q in (r, inf), 1/p + 1/q = 1/r.
BoundCertificate burgers_certificate(const GalerkinModel& m, const BoundQuery& query);

}  // namespace sdestab
