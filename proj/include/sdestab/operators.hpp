#pragma once

#include "sdestab/core.hpp"

#include <utility>

namespace sdestab {

using RowVec = Eigen::RowVectorXd;

struct OperatorValues {
    double gen = 0.0;
    RowVec noise_row;
    double extgen = 0.0;
    RowVec extnoise_row;
    double ratio_gen = 0.0;       // extgen / V, with 0/0 = 0
    double ratio_noise_sq = 0.0;  // ||extnoise_row||^2 / V^2, with 0/0 = 0
};

// gen = grad U . mu + 1/2 tr(sigma sigma^T Hess U), noise_row = grad U^T sigma.
OperatorValues apply_operators(const SdeModel& model, const ScalarField& field, const Vec& x);

// Generator of the coupled pair (X^x, X^y) driven by one Brownian motion, applied to V.
OperatorValues apply_extended(const SdeModel& model, const PairField& V, const Vec& x, const Vec& y);

// A smooth map Phi: O -> R^k with Jacobian (k x d) and one d x d Hessian per component.
struct PhiMap {
    int k = 1;
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;
    std::function<std::vector<Mat>(const Vec&)> hessians;
};

PhiMap identity_map(int d);
// Phi(x) = x^q componentwise on (0, inf)^d.
PhiMap power_map(int d, double q);

// Closed-form (ratio_gen, ratio_noise_sq) for V(x, y) = ||Phi(x) - Phi(y)||^p.
// Throws std::domain_error when Phi(x) = Phi(y).
std::pair<double, double> power_norm_ratios(const SdeModel& model, const PhiMap& phi, double p, const Vec& x,
                                            const Vec& y);

// V(x, y) = ||Phi(x) - Phi(y)||^p with analytic partials (valid off the diagonal for p < 2).
PairField power_distance(const PhiMap& phi, double p);

// For V = ||x - y||: drift term (<D, D mu> + ||D sigma||^2 / 2) / ||D||^2 and
// noise term ||D^T D sigma||^2 / ||D||^4, the two ingredients of every
// pointwise condition on the difference of two solutions.
struct TwoPointTerms {
    double drift = 0.0;
    double noise = 0.0;
};
TwoPointTerms two_point_terms(const SdeModel& model, const Vec& x, const Vec& y);

}  // namespace sdestab
