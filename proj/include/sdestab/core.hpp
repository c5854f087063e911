#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sdestab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponent in (0, inf]. Infinity is a tag so that 1/inf is exactly 0.
class Exponent {
public:
    Exponent() = default;
    explicit Exponent(double v);
    static Exponent infinity();

    bool is_inf() const { return inf_; }
    double value() const { return inf_ ? kInf : v_; }
    double reciprocal() const { return inf_ ? 0.0 : 1.0 / v_; }
    std::string str() const;

private:
    double v_ = 1.0;
    bool inf_ = false;
};

enum class DomainKind { all_space, positive_orthant, open_box, unit_interval_interior, simplex_like };

struct DomainSpec {
    DomainKind kind = DomainKind::all_space;
    Vec lower;   // per coordinate, only used for open_box
    Vec upper;
    double margin = 1e-12;

    static DomainSpec all_space();
    static DomainSpec positive_orthant(double margin = 1e-12);
    static DomainSpec open_box(Vec lower, Vec upper, double margin = 1e-12);
    static DomainSpec unit_interval(double margin = 1e-12);
    static DomainSpec simplex_like(double margin = 1e-12);

    bool contains(const Vec& x) const;
    std::string describe() const;
};

// One-dimensional change of variables y = fwd(x) under which the diffusion
// coefficient is the constant `diffusion`. Used by the transformed schemes.
struct ScalarTransform {
    std::function<double(double)> fwd;
    std::function<double(double)> inv;
    std::function<double(double)> drift;        // drift of Y as a function of y
    std::function<double(double)> drift_deriv;  // d/dy of drift
    double diffusion = 0.0;
    double y_lower = 0.0;
    double y_upper = kInf;
    bool reflect = false;
    // Effective [lo, hi] for step size dt such that 1 + dt * drift_deriv >= 1/2.
    std::function<std::pair<double, double>(double)> safe_range;
};

struct SdeModel {
    std::string name;
    int dim_state = 1;
    int dim_noise = 1;
    std::function<Vec(const Vec&)> drift;
    std::function<Mat(const Vec&)> diffusion;
    DomainSpec domain;
    // Optional derivative data, used by the monotonicity scans.
    std::function<Mat(const Vec&)> drift_jacobian;
    std::function<Mat(const Vec&, const Vec&)> diffusion_directional;  // sigma'(x) v, d x m
    std::optional<ScalarTransform> transform;
};

struct ScalarField {
    std::string name;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
    double alpha = 0.0;
    double beta = 0.0;
};

struct PairField {
    std::string name;
    std::function<double(const Vec&, const Vec&)> value;
    std::function<Vec(const Vec&, const Vec&)> dx;
    std::function<Vec(const Vec&, const Vec&)> dy;
    std::function<Mat(const Vec&, const Vec&)> dxx;
    std::function<Mat(const Vec&, const Vec&)> dxy;  // (i, j) = d^2 V / dx_i dy_j
    std::function<Mat(const Vec&, const Vec&)> dyy;
    bool nonnegative = true;
    std::string zero_set_note;
};

struct BoundQuery {
    double T = 1.0;
    Exponent r{2.0};
    Exponent p = Exponent::infinity();
    Exponent q0 = Exponent::infinity();
    Exponent q1{2.0};
    double theta = 1.0;
    Exponent rho_aux = Exponent::infinity();
    Vec x;
    Vec y;

    // Throws std::invalid_argument when 1/r != 1/p + 1/q0 + 1/q1 beyond 1e-12.
    void validate() const;
    // Additionally checks theta in (0, p) and rho_aux in [p, inf].
    void validate_uniform() const;
};

enum class TheoremKind { ThmUV, ThmUV2, CorUV2, CorUV3, ExpMoment, Martingale, ModelSpecific };

std::string theorem_name(TheoremKind k);

struct BoundCertificate {
    double value = 0.0;
    double log_value = 0.0;
    bool overflow = false;
    TheoremKind theorem = TheoremKind::ThmUV;
    std::string model;  // used with ModelSpecific
    BoundQuery query;
    std::map<std::string, double> constants_used;
};

// Either a certificate or the reason why none exists.
struct CertResult {
    std::optional<BoundCertificate> cert;
    std::string reason;

    bool ok() const { return cert.has_value(); }
    static CertResult none(std::string why) { return CertResult{std::nullopt, std::move(why)}; }
};

// Builds a certificate from its logarithm so that overflow is flagged rather than lost.
BoundCertificate make_certificate(double log_value, TheoremKind kind, const BoundQuery& q,
                                  std::map<std::string, double> constants, std::string model = "");

enum class Scheme { euler_maruyama, transformed, reflected_transformed };

Scheme parse_scheme(const std::string& s);
std::string scheme_name(Scheme s);

struct McConfig {
    std::size_t n_paths = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double ci_level = 0.95;
    // Each step consumes the sum of `substeps` finer increments. Lets runs at
    // different dt share one Brownian path.
    int substeps = 1;
    int threads = 0;  // 0: hardware concurrency capped by SDESTAB_THREADS

    // Number of steps N with |N dt - T| <= 4 eps T, otherwise throws.
    std::size_t steps_for(double T) const;
    void validate(bool need_ci) const;
};

struct PointCheck {
    Vec point;
    bool in_domain = false;
    bool finite_drift = false;
    bool finite_diffusion = false;
    bool shape_ok = false;
    bool pass() const { return in_domain && finite_drift && finite_diffusion && shape_ok; }
};

struct ValidationReport {
    std::vector<PointCheck> points;
    bool pass = false;
};

ValidationReport validate_model(const SdeModel& model, const std::vector<Vec>& probe_points);

// Max over components of |analytic - central difference| / (1 + |analytic|),
// checking gradient against value and Hessian against gradient.
double fd_consistency(const ScalarField& field, const Vec& x, double h);
double fd_consistency(const PairField& field, const Vec& x, const Vec& y, double h);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

}  // namespace sdestab
