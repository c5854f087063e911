#pragma once

#include "sdestab/bounds.hpp"
#include "sdestab/core.hpp"
#include "sdestab/simulate.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sdestab {

enum class EstimatorKind { lp, sup_lp, exp_moment, max };

std::string estimator_name(EstimatorKind k);

struct McEstimate {
    double point_estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_effective = 0;
    EstimatorKind kind = EstimatorKind::lp;
    bool unreliable = false;  // more than half of the pairs left the domain
    bool overflow = false;    // some path contributed +inf
    double stopped_fraction = 0.0;
    std::string note;

    // Query metadata, compared by verify_certificate when present.
    bool has_meta = false;
    double T = 0.0;
    Exponent r{2.0};
    Vec x;
    Vec y;
};

// L^p(Omega) norm of nonnegative samples. p < inf: (mean s^p)^{1/p} with a normal
// CI on the p-th moment mapped through u -> u^{1/p}, or a 200-resample percentile
// bootstrap when p >= 8. p = inf: the sample max, CI collapsed onto it.
McEstimate lp_norm(const std::vector<double>& samples, const Exponent& p, double ci_level,
                   std::uint64_t bootstrap_seed = 0x5DEECE66DULL);

struct LipschitzEstimates {
    McEstimate marginal;  // L^r norm of the distance at T
    McEstimate uniform;   // L^r norm of the sup over the time grid
};

// Coupled pairs from (x, y) with the same noise; distances measured in `space`.
LipschitzEstimates empirical_lipschitz(const SdeModel& model, const BoundQuery& query, const McConfig& cfg,
                                       DistanceSpace space = DistanceSpace::original);

// Estimates E[exp(e^{-alpha tau} U(X_tau) + sum_k e^{-alpha t_k} U_bar(t_k, X_k) dt)],
// tau = T or the exit time (stopped paths).
McEstimate exp_moment_estimate(const SdeModel& model, const ScalarField& field, const TimeField& ubar,
                               const Vec& x, double T, const McConfig& cfg);

struct Verdict {
    bool pass = false;
    double empirical = 0.0;  // the value compared against the bound
    double bound = 0.0;
    double margin = 0.0;     // bound - empirical
    std::string message;
};

// Pass iff empirical (ci_high, or the point for kind max) <= value (1 + slack).
// Throws std::invalid_argument on mismatched (T, r, x, y) metadata.
Verdict verify_certificate(const McEstimate& empirical, const BoundCertificate& cert, double slack);

}  // namespace sdestab
