#pragma once

#include "sdestab/core.hpp"
#include "sdestab/operators.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace sdestab {

// U_bar(t, x) in the Lyapunov inequality.
using TimeField = std::function<double(double, const Vec&)>;

struct LyapunovViolation {
    double t = 0.0;
    Vec x;
    double margin = 0.0;
};

struct LyapunovCheckReport {
    std::size_t grid_size = 0;
    double worst_margin = kInf;
    std::vector<LyapunovViolation> violating_points;
    double tolerance = 0.0;
    bool pass = false;
};

// Checks G U + e^{-alpha t} ||sigma^T grad U||^2 / 2 + U_bar(t, x) <= alpha U + beta
// at every (t, x) of the grid. Throws std::domain_error (naming the point) on
// non-finite evaluations. With `moment_form` the noise term is dropped, which
// checks the moment inequality G U <= alpha U + beta instead.
LyapunovCheckReport lyapunov_check(const SdeModel& model, const ScalarField& field, const TimeField& ubar,
                                   const std::vector<Vec>& grid, const std::vector<double>& t_grid, double tol,
                                   bool moment_form = false);

struct ScalarBound {
    double value = 0.0;
    double log_value = 0.0;
    bool overflow = false;
};

// exp(U(x)): bound for E[exp(e^{-alpha tau} U(X_tau) + int e^{-alpha s} U_bar ds)]
// when the inequality holds with beta = 0.
ScalarBound exp_moment_bound_rhs(const ScalarField& field, const Vec& x);
// Shifted form for beta != 0: bound for E[exp(e^{-alpha T} U(X_T))] given by
// exp(U(x) + int_0^T beta e^{-alpha s} ds).
ScalarBound exp_moment_bound_shifted(const ScalarField& field, const Vec& x, double T);

// (1 - 1/p)^{-1} exp(1/2 [1/(1/p - 1/q) - 1] I_q); throws for p <= 1 or q < p.
double martingale_sup_bound(const Exponent& p, const Exponent& q, double integral_bound);
// The q = 2p form (1 - 1/p)^{-1} exp((p - 1/2) I_{2p}).
double martingale_sup_bound_2p(const Exponent& p, double integral_bound);

// int_0^T beta (1 - s/T)^{1-j} e^{-alpha s} ds for j in {0, 1}.
double time_integral(double beta, double alpha, double T, int j);

// Marginal bound in its constant-alpha = 0 form:
// V exp(c T + sum_i (2 beta_i T + U_i(x) + U_i(y)) / (2 q_i)).
struct ThmUVInputs {
    double V_xy = 0.0;
    double c = 0.0;
    double U0x = 0.0, U0y = 0.0, U1x = 0.0, U1y = 0.0;
    double beta0 = 0.0, beta1 = 0.0;
};
BoundCertificate thm_uv_bound(const BoundQuery& query, const ThmUVInputs& in);

// One Lyapunov term of the marginal or uniform bound. `group` is the first
// index (0: enters the c_0 condition, 1: the c_1 condition; marginal bounds use
// group 1 only), `j` selects the time weight: j = 0 uses U / T with weight
// (1 - s/T), j = 1 uses U_bar with weight 1.
//
// With `q_limit` the field is already scaled by 1/q and q is infinite: this is
// the limit q -> inf with U proportional to q, which is legitimate when the
// Lyapunov inequality is homogeneous in U (sigma^T grad U = 0).
struct LyapTerm {
    int group = 1;
    int j = 1;
    Exponent q{2.0};
    bool q_limit = false;
    ScalarField field;  // U with its alpha and beta
    std::function<double(const Vec&)> ubar;  // only for j = 1

    double weight() const { return q_limit ? 1.0 : q.reciprocal(); }
};

struct BoundSetup {
    bool uniform = true;
    Exponent r{2.0};
    Exponent p = Exponent::infinity();
    Exponent rho_aux = Exponent::infinity();
    double theta = 1.0;
    double T = 1.0;
    std::function<double(double)> c0;  // pointwise constants c_0(t), c_1(t)
    std::function<double(double)> c1;
    double c0_int = 0.0;               // int_0^T c_0, int_0^T c_1 in closed form
    double c1_int = 0.0;
    std::vector<LyapTerm> terms;
};

// Throws std::invalid_argument when the exponent identities of the setup fail.
void check_exponents(const BoundSetup& s);

// log of V(x,y) (1 - theta/p)^{-1/theta} exp(int c_0 + c_1)
//   exp(sum [w int beta (1-s/T)^{1-j} e^{-alpha s} ds + w (U(x) + U(y)) / 2]).
// Marginal setups drop the prefactor and c_0.
double setup_log_bound(const BoundSetup& s, double V_xy, const Vec& x, const Vec& y);

// RHS - LHS of the pointwise conditions at (v, w, t) for V = ||v - w||.
// Uniform: first = c_0 condition, second = c_1 condition. Marginal: only `second`.
std::pair<double, double> setup_condition_margins(const BoundSetup& s, const SdeModel& model, const Vec& v,
                                                  const Vec& w, double t);

// Uniform bound given closed-form constants and terms.
BoundCertificate uniform_bound(const BoundQuery& query, const BoundSetup& setup, double V_xy);

// (1 - 1/r)^{-1/2} exp((c0 + c1) T + (beta T + c (1+||x||^2)^eps + c (1+||y||^2)^eps) / (2r)).
BoundCertificate cor_uv3_bound(double c0, double c1, double beta, double c, double eps, const Exponent& r,
                               double T, const Vec& x, const Vec& y);

enum class MonotonicityMode { derivative_form, difference_form };

struct SupResult {
    double value = -kInf;
    std::size_t argmax = 0;
};

// derivative_form: samples are (x, v) with v a direction (normalized internally);
// value <v, mu'(x) v> + ||sigma'(x) v||^2 / 2 + (p/2 - 1) ||(sigma'(x) v)^T v||^2, |v| = 1.
// difference_form: samples are (x, y) pairs; value
// (<D, D mu> + ||D sigma||^2/2)/||D||^2 + (p/2 - 1) ||D^T D sigma||^2/||D||^4.
SupResult monotonicity_sup(const SdeModel& model, double p, MonotonicityMode mode,
                           const std::vector<std::pair<Vec, Vec>>& samples);

// Pairs (x - h v/2, x + h v/2) matching a derivative-form sample set.
std::vector<std::pair<Vec, Vec>> matched_pairs(const std::vector<std::pair<Vec, Vec>>& samples, double h);

// argmin over r in [r_lo, r_hi] of max_k branch_k(r), optionally clipped below at 0.
std::pair<double, double> minmax_theta(const std::vector<std::function<double(double)>>& branches, double r_lo,
                                       double r_hi, bool clip_zero);

// U(x) exp(t sup_ratio): bound for E[U(X_t)] when G U <= sup_ratio U.
double moment_bound_lyapunov(double sup_ratio, double U_at_x, double t);

// Sup of a continuous f on [lo, hi] from a uniform (or log-uniform) grid plus
// golden-section refinement around the best grid point.
double grid_sup_1d(const std::function<double(double)>& f, double lo, double hi, std::size_t n, bool log_grid);

}  // namespace sdestab
