#pragma once

#include "sdestab/bounds.hpp"
#include "sdestab/core.hpp"
#include "sdestab/operators.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sdestab {

enum class ZooName {
    van_der_pol,
    duffing_vdp,
    lorenz,
    langevin,
    brownian_dynamics,
    sir,
    psychology,
    brusselator,
    volatility,
    wright_fisher,
    rotation_counterexample
};

using Params = std::map<std::string, double>;

std::string zoo_name(ZooName n);
ZooName parse_zoo_name(const std::string& s);
std::vector<ZooName> all_zoo_names();

// A Lyapunov-type function with its (alpha, beta) and optional U_bar.
struct LyapunovEntry {
    ScalarField field;
    std::function<double(const Vec&)> ubar;  // null when absent
    std::string note;
    bool moment_form = false;  // G U <= alpha U + beta, without the noise term
};

struct Box {
    Vec lo;
    Vec hi;
};

struct ZooEntry {
    ZooName name = ZooName::van_der_pol;
    std::string variant;
    Params params;
    SdeModel model;
    std::vector<LyapunovEntry> lyapunov;
    PairField distance;
    Box box;             // default sampling box inside the domain
    Scheme scheme = Scheme::euler_maruyama;  // scheme used for this entry's experiments
    Vec default_x;
    Vec default_y;
    double default_T = 0.5;
};

// Default parameters and variant of every entry.
Params default_params(ZooName n);
std::string default_variant(ZooName n);

// Builds the entry; `overrides` replace defaults. Throws std::invalid_argument
// naming the violated condition when the parameters are infeasible.
ZooEntry build_model(ZooName n, const Params& overrides = {}, const std::string& variant = "");

// Reason the query is infeasible for the entry, empty when feasible.
std::string feasibility(const ZooEntry& e, const BoundQuery& q, const std::string& kind = "");

// Names of the certificate kinds an entry supports; the first is the default.
std::vector<std::string> certificate_kinds(ZooName n);

// Closed-form certificate, with free constants chosen by a small grid search.
// Kinds: "uniform" (default for the Euclidean models, bounds the L^r norm of
// sup_t |X^x_t - X^y_t|), volatility: "linf", "sup_linf", "lipschitz",
// "uniform2", "global"; Wright-Fisher: "transformed", "original".
CertResult certificate(const ZooEntry& e, const BoundQuery& q, const std::string& kind = "");

// For the Euclidean models: the bound setup the certificate was computed from
// (free constants filled in), used to check the pointwise conditions.
std::optional<BoundSetup> certificate_setup(const ZooEntry& e, const BoundQuery& q, std::string* reason = nullptr);

// Query with the entry's default points and horizon.
BoundQuery default_query(const ZooEntry& e);

struct FellerReport {
    bool zero_inaccessible = false;
    bool one_inaccessible = false;  // Wright-Fisher only
    std::string reason;
};
FellerReport feller_boundary(ZooName n, const Params& params);

// sup over u in (0, inf) of sum_i c_i u^{e_i}, exact in the tails.
double power_sum_sup(std::vector<std::pair<double, double>> terms);

// Volatility family helpers (transformed rate S, moment ratio, global Lipschitz rate).
double volatility_rate(const Params& p);
double volatility_moment_ratio(const Params& p, double power, double eta);
double volatility_global_rate(const Params& p, double moment_p);

// Bound E[exp(U(X_T) e^{-alpha T} + ...)] <= exp(U(x) + int beta e^{-alpha s} ds) for entry Lyapunov k.
BoundCertificate exp_moment_certificate(const ZooEntry& e, std::size_t k, const Vec& x, double T);

// The one-dimensional C^1 model with mu and sigma_p for which the derivative
// form of the monotonicity constant is 0 but the difference form at (-1, 3) is 1.
SdeModel counterexample_model(double p);

// Published closed form of the Lorenz uniform bound (Young constant 1/32), kept for comparison.
double lorenz_reference_log_bound(const ZooEntry& e, const BoundQuery& q, double rho);

}  // namespace sdestab
