#include "sdestab/core.hpp"
#include "sdestab/modelzoo.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sdestab;
using testutil::vec;

TEST(Exponent, InfinityHasZeroReciprocal) {
    const Exponent e = Exponent::infinity();
    EXPECT_TRUE(e.is_inf());
    EXPECT_EQ(e.reciprocal(), 0.0);
    EXPECT_EQ(Exponent(4.0).reciprocal(), 0.25);
}

TEST(Exponent, RejectsNonPositive) {
    EXPECT_THROW(Exponent(0.0), std::invalid_argument);
    EXPECT_THROW(Exponent(-1.0), std::invalid_argument);
    EXPECT_THROW(Exponent(std::nan("")), std::invalid_argument);
}

TEST(BoundQuery, HolderIdentityEnforced) {
    BoundQuery q;
    q.x = vec({0.0});
    q.y = vec({1.0});
    q.r = Exponent(2.0);
    q.p = Exponent(4.0);
    q.q0 = Exponent::infinity();
    q.q1 = Exponent(4.0);
    EXPECT_NO_THROW(q.validate());
    q.q1 = Exponent(4.0 * (1.0 + 1e-9));
    EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(BoundQuery, UniformChecksThetaAndRhoAux) {
    BoundQuery q;
    q.x = vec({0.0});
    q.y = vec({1.0});
    q.r = Exponent(2.0);
    q.p = Exponent(4.0);
    q.q1 = Exponent(4.0);
    q.theta = 1.0;
    EXPECT_NO_THROW(q.validate_uniform());
    q.theta = 4.0;
    EXPECT_THROW(q.validate_uniform(), std::invalid_argument);
    q.theta = 1.0;
    q.rho_aux = Exponent(3.0);
    EXPECT_THROW(q.validate_uniform(), std::invalid_argument);
}

TEST(Domain, StrictMembershipWithMargin) {
    const DomainSpec pos = DomainSpec::positive_orthant();
    EXPECT_FALSE(pos.contains(vec({0.0})));
    EXPECT_TRUE(pos.contains(vec({1e-6})));
    const DomainSpec unit = DomainSpec::unit_interval();
    EXPECT_FALSE(unit.contains(vec({1.0})));
    EXPECT_TRUE(unit.contains(vec({0.5})));
    EXPECT_TRUE(DomainSpec::all_space().contains(vec({-1e300})));
}

TEST(ValidateModel, SmoothOrnsteinUhlenbeck) {
    const SdeModel m = testutil::affine_1d(-1.0, 0.0, 0.0, 1.0);
    const auto rep = validate_model(m, {vec({-1.0}), vec({0.0}), vec({1.0})});
    EXPECT_TRUE(rep.pass);
}

TEST(ValidateModel, CirRejectsBoundaryPoint) {
    const ZooEntry e = build_model(ZooName::volatility);
    const auto rep = validate_model(e.model, {vec({0.0})});
    EXPECT_FALSE(rep.pass);
    EXPECT_FALSE(rep.points[0].in_domain);
}

TEST(ValidateModel, LorenzRandomPoints) {
    const ZooEntry e = build_model(ZooName::lorenz);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::vector<Vec> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(vec({u(rng), u(rng), u(rng)}));
    EXPECT_TRUE(validate_model(e.model, pts).pass);
}

TEST(FdConsistency, QuadraticIsExact) {
    const ScalarField f = testutil::quadratic(1.7, 3);
    EXPECT_LT(fd_consistency(f, vec({0.3, -1.2, 2.0}), 1e-4), 1e-7);
}

TEST(FdConsistency, ConstantField) {
    ScalarField f;
    f.value = [](const Vec&) { return 3.0; };
    f.gradient = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    f.hessian = [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
    EXPECT_LT(fd_consistency(f, vec({0.5, 0.5}), 1e-4), 1e-9);
}

TEST(FdConsistency, QuarticAtOne) {
    ScalarField f;
    f.value = [](const Vec& x) { return std::pow(x(0), 4); };
    f.gradient = [](const Vec& x) { return Vec(Vec::Constant(1, 4.0 * std::pow(x(0), 3))); };
    f.hessian = [](const Vec& x) { return Mat(Mat::Constant(1, 1, 12.0 * x(0) * x(0))); };
    EXPECT_LT(fd_consistency(f, vec({1.0}), 1e-4), 1e-6);
}

TEST(FdConsistency, DetectsWrongGradient) {
    ScalarField f = testutil::quadratic(1.0, 1);
    f.gradient = [](const Vec& x) { return Vec(3.0 * x); };
    EXPECT_GT(fd_consistency(f, vec({1.0}), 1e-4), 0.1);
}

// Every zoo field has consistent derivatives and a symmetric Hessian on its box.
TEST(ZooFields, FiniteDifferenceAndSymmetry) {
    std::mt19937_64 rng(11);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        for (const auto& L : e.lyapunov) {
            for (int i = 0; i < 100; ++i) {
                const Vec x = testutil::uniform_in(e.box, rng);
                EXPECT_LT(fd_consistency(L.field, x, 1e-4), 1e-5) << zoo_name(n) << " " << L.field.name;
                const Mat H = L.field.hessian(x);
                EXPECT_LE((H - H.transpose()).norm(), 1e-12 * (1.0 + H.norm())) << zoo_name(n);
            }
        }
    }
}

TEST(Certificate, OverflowIsFlagged) {
    BoundQuery q;
    const BoundCertificate c = make_certificate(1e4, TheoremKind::CorUV2, q, {});
    EXPECT_TRUE(c.overflow);
    EXPECT_TRUE(std::isinf(c.value));
    const BoundCertificate d = make_certificate(std::log(2.0), TheoremKind::CorUV2, q, {});
    EXPECT_FALSE(d.overflow);
    EXPECT_NEAR(d.value, 2.0, 1e-15);
    EXPECT_THROW(make_certificate(std::nan(""), TheoremKind::CorUV2, q, {}), std::domain_error);
}

TEST(McConfig, StepsMustDivideHorizon) {
    McConfig c;
    c.dt = 1e-3;
    EXPECT_EQ(c.steps_for(1.0), 1000u);
    c.dt = 0.3;
    EXPECT_THROW(c.steps_for(1.0), std::invalid_argument);
    c.dt = 0.1;
    EXPECT_EQ(c.steps_for(0.5), 5u);
}

TEST(Scheme, NamesRoundTrip) {
    for (const Scheme s : {Scheme::euler_maruyama, Scheme::transformed, Scheme::reflected_transformed}) {
        EXPECT_EQ(parse_scheme(scheme_name(s)), s);
    }
    EXPECT_THROW(parse_scheme("milstein"), std::invalid_argument);
}
