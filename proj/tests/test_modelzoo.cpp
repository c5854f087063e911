#include "sdestab/modelzoo.hpp"
#include "sdestab/simulate.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sdestab;
using testutil::vec;

namespace {

std::vector<Vec> random_grid(const Box& b, int n, std::mt19937_64& rng) {
    std::vector<Vec> g;
    for (int i = 0; i < n; ++i) g.push_back(testutil::uniform_in(b, rng));
    return g;
}

struct Case {
    ZooName name;
    std::string variant;
    Params params;
};

std::vector<Case> euclidean_cases() {
    return {{ZooName::van_der_pol, "", {}},     {ZooName::van_der_pol, "linear", {}},
            {ZooName::duffing_vdp, "", {}},     {ZooName::duffing_vdp, "linear", {}},
            {ZooName::lorenz, "", {}},          {ZooName::langevin, "", {}},
            {ZooName::brownian_dynamics, "", {}}, {ZooName::sir, "", {}},
            {ZooName::psychology, "", {}},      {ZooName::brusselator, "", {}}};
}

BoundQuery query_for(const ZooEntry& e, const std::string& variant) {
    BoundQuery q = default_query(e);
    if (variant == "linear") {
        q.p = Exponent(8.0);
        q.q1 = Exponent(8.0 / 3.0);
    }
    return q;
}

// vartheta = min_r max((a1 + a2)^2 / r - 2 a1, r - 1) clipped at 0: the branches cross at the root below.
double lorenz_vartheta_oracle(const Params& p) {
    const double a1 = p.at("alpha1"), s = a1 + p.at("alpha2");
    const double rr = (1.0 - 2.0 * a1 + std::sqrt((2.0 * a1 - 1.0) * (2.0 * a1 - 1.0) + 4.0 * s * s)) / 2.0;
    return std::max(0.0, rr - 1.0);
}

}  // namespace

TEST(Registry, NamesRoundTripAndUnknownRejected) {
    for (const ZooName n : all_zoo_names()) EXPECT_EQ(parse_zoo_name(zoo_name(n)), n);
    EXPECT_THROW(parse_zoo_name("heston"), std::invalid_argument);
    EXPECT_THROW(build_model(ZooName::lorenz, {{"no_such", 1.0}}), std::invalid_argument);
    EXPECT_THROW(build_model(ZooName::lorenz, {{"rho", std::nan("")}}), std::invalid_argument);
    EXPECT_THROW(build_model(ZooName::lorenz, {}, "quantum"), std::invalid_argument);
}

TEST(Registry, EveryEntryValidatesOnItsBox) {
    std::mt19937_64 rng(1);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        EXPECT_TRUE(validate_model(e.model, random_grid(e.box, 200, rng)).pass) << zoo_name(n);
        EXPECT_TRUE(e.model.domain.contains(e.default_x)) << zoo_name(n);
        EXPECT_TRUE(e.model.domain.contains(e.default_y)) << zoo_name(n);
    }
}

// The Lyapunov inequalities hold pointwise on each default box, and U_bar >= 0.
TEST(Lyapunov, EveryEntryPassesOnBox) {
    std::mt19937_64 rng(2);
    for (const Case& c : euclidean_cases()) {
        const ZooEntry e = build_model(c.name, c.params, c.variant);
        const auto grid = random_grid(e.box, 5000, rng);
        for (const auto& L : e.lyapunov) {
            TimeField ub;
            if (L.ubar) {
                ub = [f = L.ubar](double, const Vec& x) { return f(x); };
                for (const auto& x : grid) ASSERT_GE(L.ubar(x), 0.0) << zoo_name(c.name);
            }
            const auto rep = lyapunov_check(e.model, L.field, ub, grid, {0.0, e.default_T / 2, e.default_T}, 1e-9,
                                            L.moment_form);
            EXPECT_TRUE(rep.pass) << zoo_name(c.name) << "/" << c.variant << " " << L.field.name << " worst "
                                  << rep.worst_margin;
        }
    }
    for (const ZooName n : {ZooName::volatility, ZooName::wright_fisher}) {
        const ZooEntry e = build_model(n);
        for (const auto& L : e.lyapunov) {
            TimeField ub;
            if (L.ubar) ub = [f = L.ubar](double, const Vec& x) { return f(x); };
            EXPECT_TRUE(lyapunov_check(e.model, L.field, ub, random_grid(e.box, 5000, rng), {0.0}, 1e-9, L.moment_form)
                            .pass)
                << zoo_name(n);
        }
    }
}

// The pointwise conditions behind each certificate, at random (v, w, t) far beyond the box.
TEST(Certificates, SetupConditionsHoldAtRandomPoints) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const Case& c : euclidean_cases()) {
        const ZooEntry e = build_model(c.name, c.params, c.variant);
        const BoundQuery q = query_for(e, c.variant);
        std::string why;
        const auto s = certificate_setup(e, q, &why);
        ASSERT_TRUE(s.has_value()) << zoo_name(c.name) << ": " << why;
        const int d = e.model.dim_state;
        double w0 = kInf, w1 = kInf;
        for (int i = 0; i < 20000; ++i) {
            Vec v(d), w(d);
            const double sc = std::exp(1.5 * nd(rng));
            for (int k = 0; k < d; ++k) {
                v(k) = sc * nd(rng);
                w(k) = i % 2 ? v(k) + 1e-3 * nd(rng) : sc * nd(rng);
            }
            if (e.model.domain.kind != DomainKind::all_space) {
                v = v.cwiseAbs();
                w = w.cwiseAbs();
            }
            const auto [m0, m1] = setup_condition_margins(*s, e.model, v, w, q.T * u(rng));
            w0 = std::min(w0, m0);
            w1 = std::min(w1, m1);
        }
        EXPECT_GE(w0, -1e-9) << zoo_name(c.name) << "/" << c.variant;
        EXPECT_GE(w1, -1e-9) << zoo_name(c.name) << "/" << c.variant;
    }
}

TEST(Certificates, DefaultQueriesFinite) {
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        for (const auto& k : certificate_kinds(n)) {
            const CertResult c = certificate(e, default_query(e), k);
            if (n == ZooName::volatility && k == "global") {
                EXPECT_FALSE(c.ok());  // CIR: the quadratic-variation term is unbounded near 0
                continue;
            }
            ASSERT_TRUE(c.ok()) << zoo_name(n) << "/" << k << ": " << c.reason;
            EXPECT_TRUE(std::isfinite(c.cert->value) && c.cert->value > 0.0) << zoo_name(n) << "/" << k;
        }
    }
    EXPECT_TRUE(certificate_kinds(ZooName::rotation_counterexample).empty());
}

TEST(Certificates, EqualStartsGiveZero) {
    const ZooEntry e = build_model(ZooName::lorenz);
    BoundQuery q = default_query(e);
    q.y = q.x;
    const CertResult c = certificate(e, q);
    ASSERT_TRUE(c.ok());
    EXPECT_EQ(c.cert->value, 0.0);
}

TEST(Certificates, UnsupportedQueriesReported) {
    const ZooEntry e = build_model(ZooName::van_der_pol, {}, "linear");
    const CertResult c = certificate(e, default_query(e));  // p = inf is not allowed with linear noise
    EXPECT_FALSE(c.ok());
    EXPECT_FALSE(c.reason.empty());
    EXPECT_FALSE(feasibility(e, default_query(e)).empty());
    const ZooEntry b = build_model(ZooName::brusselator, {}, "affine");
    EXPECT_FALSE(certificate(b, default_query(b)).ok());
}

TEST(VanDerPol, ShippedBoundMatchesClosedForm) {
    const ZooEntry e = build_model(ZooName::van_der_pol, {}, "linear");
    const BoundQuery q = query_for(e, "linear");
    const CertResult c = certificate(e, q);
    ASSERT_TRUE(c.ok()) << c.reason;
    const auto& k = c.cert->constants_used;
    const double rho = k.at("rho"), th = k.at("vartheta"), p = 8.0, qq = 8.0 / 3.0, theta = q.theta, T = q.T;
    const double a = e.params.at("alpha"), g = e.params.at("gamma"), dl = e.params.at("delta");
    const double L = e.params.at("c"), eta1 = L * L, eta0 = 0.0;  // linear noise g = c x1
    // Closed form, with its beta contribution written as the time integral 2 int_0^T rho eta0 e^{-vartheta s} ds.
    const double beta_int = 2.0 * rho * eta0 * (1.0 - std::exp(-th * T)) / th;
    const double lv = std::log((q.x - q.y).norm()) - std::log(1.0 - theta / p) / theta +
                      (g + std::hypot(g, dl - 1.0)) * T / 2.0 + (p + std::max(2.0, 4.0 - theta)) * T * L * L / 8.0 +
                      qq * a * a * std::expm1(th * T) / th / (8.0 * rho * (a - rho * eta1)) +
                      (beta_int + rho * q.x.squaredNorm() + rho * q.y.squaredNorm()) / (2.0 * qq);
    EXPECT_NEAR(c.cert->log_value, lv, 1e-9);
}

// The shipped bound uses the Young constant 1/8 where the reference form has 1/32, and
// exact time integrals; with 1/8 in the reference form it dominates the shipped value.
TEST(Lorenz, ShippedBoundBelowCorrectedReference) {
    const ZooEntry e = build_model(ZooName::lorenz);
    const BoundQuery q = default_query(e);
    const CertResult c = certificate(e, q);
    ASSERT_TRUE(c.ok());
    const double rho = c.cert->constants_used.at("rho"), T = q.T, r = q.r.value();
    const double al = 2.0 * rho * e.params.at("beta") + lorenz_vartheta_oracle(e.params);
    const double fix = r * T * T * std::exp(al * T) * (1.0 / 8.0 - 1.0 / 32.0) / rho;
    EXPECT_LE(c.cert->log_value, lorenz_reference_log_bound(e, q, rho) + fix + 1e-12);
}

TEST(Lorenz, ReferenceClosedForm) {
    const ZooEntry e = build_model(ZooName::lorenz);
    const BoundQuery q = default_query(e);
    const double rho = 0.05, T = q.T, r = q.r.value(), beta = e.params.at("beta");
    const double a1 = e.params.at("alpha1"), a2 = e.params.at("alpha2"), a3 = e.params.at("alpha3");
    Mat A(3, 3);
    A << -a1, a1, 0, a2, -1, 0, 0, 0, -a3;
    const Eigen::SelfAdjointEigenSolver<Mat> es(A + A.transpose());
    const double vt = lorenz_vartheta_oracle(e.params);
    const double lv = std::log((q.x - q.y).norm()) + es.eigenvalues().maxCoeff() * T / 2.0 +
                      r * T * T * std::exp((2.0 * rho * beta + vt) * T) / (32.0 * rho) +
                      (3.0 + rho * q.x.squaredNorm() + rho * q.y.squaredNorm()) / (2.0 * r);
    EXPECT_NEAR(lorenz_reference_log_bound(e, q, rho), lv, 1e-8);
}

TEST(Lorenz, ExpMomentShiftedBound) {
    const ZooEntry e = build_model(ZooName::lorenz, {{"rho", 0.05}});
    const Vec x = e.default_x;
    const BoundCertificate c = exp_moment_certificate(e, 0, x, 0.1);
    // exp(rho ||x||^2 + int beta e^{-alpha s}) <= exp(3/2 + rho ||x||^2) for the default T.
    EXPECT_LE(c.log_value, 1.5 + 0.05 * x.squaredNorm() + 1e-12);
    EXPECT_GE(c.log_value, 0.05 * x.squaredNorm());
}

TEST(Sir, ExpMomentBoundIsExpU) {
    const ZooEntry e = build_model(ZooName::sir);
    const double rho = e.params.at("rho");
    const Vec x = e.default_x;
    const BoundCertificate c = exp_moment_certificate(e, 0, x, 0.5);
    EXPECT_NEAR(c.log_value, rho * (x(0) + x(1) - 1.0), 1e-12);
}

TEST(Psychology, NormPowersAreConserved) {
    for (const double lp : {1.0, 1.5, 3.0}) {
        const ZooEntry e = build_model(ZooName::psychology, {{"lyap_p", lp}});
        std::mt19937_64 rng(4);
        for (int i = 0; i < 50; ++i) {
            const Vec x = testutil::uniform_in(e.box, rng);
            const auto ov = apply_operators(e.model, e.lyapunov[0].field, x);
            EXPECT_NEAR(ov.gen + 0.5 * ov.noise_row.squaredNorm(), 0.0, 1e-10 * (1.0 + e.lyapunov[0].field.value(x)));
        }
    }
}

TEST(Rotation, DriftIsTangential) {
    const ZooEntry e = build_model(ZooName::rotation_counterexample);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const Vec x = vec({nd(rng), nd(rng)});
        EXPECT_NEAR(x.dot(e.model.drift(x)), 0.0, 1e-10 * std::pow(x.norm(), 4));
    }
}

TEST(Feller, Classification) {
    EXPECT_TRUE(feller_boundary(ZooName::volatility, default_params(ZooName::volatility)).zero_inaccessible);
    Params p = default_params(ZooName::volatility);
    p["delta"] = 0.0;
    EXPECT_FALSE(feller_boundary(ZooName::volatility, p).zero_inaccessible);
    const ZooEntry acc = build_model(ZooName::volatility, {{"kappa", 0.0}, {"delta", 0.1}});  // 2 delta < beta^2
    EXPECT_FALSE(feasibility(acc, default_query(acc)).empty());
    EXPECT_FALSE(certificate(acc, default_query(acc), "linf").ok());
    const ZooEntry ok = build_model(ZooName::volatility, {{"kappa", 0.0}, {"delta", 0.2}});
    EXPECT_TRUE(feasibility(ok, default_query(ok)).empty());
    const auto wf = feller_boundary(ZooName::wright_fisher, {{"beta", 0.4}, {"rho0", 0.2}, {"rho1", 0.2}, {"s", 1.0}});
    EXPECT_TRUE(wf.zero_inaccessible);
    EXPECT_TRUE(wf.one_inaccessible);
    const auto wf2 = feller_boundary(ZooName::wright_fisher, {{"beta", 0.4}, {"rho0", 0.1}, {"rho1", 0.3}, {"s", 1.0}});
    EXPECT_FALSE(wf2.zero_inaccessible);
    EXPECT_TRUE(wf2.one_inaccessible);
}

TEST(WrightFisher, NeutralCaseCertificateIsDistance) {
    const ZooEntry e = build_model(ZooName::wright_fisher, {{"beta", 0.4}, {"rho0", 0.2}, {"rho1", 0.2}, {"s", 0.0}});
    BoundQuery q = default_query(e);
    q.r = q.p = Exponent::infinity();
    const CertResult c = certificate(e, q, "transformed");
    ASSERT_TRUE(c.ok()) << c.reason;
    const double d = std::abs(std::asin(std::sqrt(q.x(0))) - std::asin(std::sqrt(q.y(0))));
    EXPECT_NEAR(c.cert->value, d, 1e-15);
}

TEST(Volatility, CirRateAndCertificate) {
    const Params p = default_params(ZooName::volatility);
    // Oracle: grid scan of (1-b) gamma - delta b / u - ... for b = 1/2, i.e. gamma/2 + (beta^2/8 - delta/2)/u.
    double sup = -kInf;
    for (int i = 1; i <= 100000; ++i) {
        const double u = 1e-3 * i;
        sup = std::max(sup, -0.5 + (0.25 / 8.0 - 0.15) / (u * u));
    }
    EXPECT_NEAR(volatility_rate(p), -0.5, 1e-12);
    EXPECT_NEAR(volatility_rate(p), sup, 1e-4);
    const ZooEntry e = build_model(ZooName::volatility);
    BoundQuery q = default_query(e);
    q.r = q.p = Exponent::infinity();
    const CertResult c = certificate(e, q, "linf");
    ASSERT_TRUE(c.ok());
    EXPECT_NEAR(c.cert->value, std::abs(std::sqrt(q.x(0)) - std::sqrt(q.y(0))) * std::exp(-0.5 * q.T), 1e-15);
}

TEST(Volatility, MomentRatioCirLinear) {
    // U_1 = 1 + u: sup (delta + gamma u) / (1 + u) = delta for gamma = -1.
    EXPECT_NEAR(volatility_moment_ratio(default_params(ZooName::volatility), 1.0, 1.0), 0.3, 1e-9);
}

TEST(Volatility, GlobalThresholdThreeHalves) {
    const double alpha = 1.0, beta = 0.5;
    const Params base = {{"kappa", 0.0}, {"delta", 0.0}, {"a", 2.0}, {"b", 1.5}, {"alpha", alpha}, {"beta", beta}};
    const double pstar = 1.0 + 16.0 * alpha / (9.0 * beta * beta);
    const ZooEntry e = build_model(ZooName::volatility, base);
    for (const double f : {0.5, 0.9, 1.0, 1.01, 1.5}) {
        BoundQuery q = default_query(e);
        q.r = Exponent(pstar * f);
        q.p = Exponent::infinity();
        q.q1 = Exponent(pstar * f);
        const CertResult c = certificate(e, q, "global");
        EXPECT_EQ(c.ok(), f <= 1.0) << "p = " << pstar * f << ": " << c.reason;
    }
}

TEST(PowerSumSup, Tails) {
    EXPECT_NEAR(power_sum_sup({{-1.0, 2.0}, {2.0, 1.0}}), 1.0, 1e-9);  // -u^2 + 2u, max 1 at u = 1
    EXPECT_TRUE(std::isinf(power_sum_sup({{1.0, 1.0}})));
    EXPECT_NEAR(power_sum_sup({{-1.0, 1.0}, {-1.0, -1.0}}), -2.0, 1e-9);
}

// x <= y implies X^x <= X^y under the transformed scheme.
TEST(Volatility, MonotoneCoupling) {
    const ZooEntry e = build_model(ZooName::volatility);
    McConfig c;
    c.dt = 1e-3;
    c.scheme = e.scheme;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const PathPair pp = coupled_pair(e.model, vec({0.8}), vec({1.1}), 1.0, c, NoiseSource(9, i));
        const std::size_t n = std::min(pp.x_path.states.size(), pp.y_path.states.size());
        for (std::size_t k = 0; k < n; ++k) ASSERT_LE(pp.x_path.states[k](0), pp.y_path.states[k](0));
    }
}

TEST(Monotonicity, DerivativeFormBelowDifferenceForm) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        if (!e.model.drift_jacobian) continue;
        Box inner = e.box;
        inner.lo.array() += 1e-4;
        inner.hi.array() -= 1e-4;
        std::vector<std::pair<Vec, Vec>> s;
        for (int i = 0; i < 2000; ++i) {
            Vec v(e.model.dim_state);
            for (int k = 0; k < v.size(); ++k) v(k) = nd(rng);
            s.emplace_back(testutil::uniform_in(inner, rng), v);
        }
        for (const double p : {1.0, 2.0, 4.0}) {
            const double der = monotonicity_sup(e.model, p, MonotonicityMode::derivative_form, s).value;
            const double dif =
                monotonicity_sup(e.model, p, MonotonicityMode::difference_form, matched_pairs(s, 1e-5)).value;
            EXPECT_LE(der, dif + 1e-6) << zoo_name(n) << " p=" << p;
            EXPECT_LE(std::abs(dif) - std::abs(der), 1e-3) << zoo_name(n) << " p=" << p;
        }
    }
}
