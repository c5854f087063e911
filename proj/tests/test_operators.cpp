#include "sdestab/modelzoo.hpp"
#include "sdestab/operators.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sdestab;
using testutil::vec;

namespace {

// Smooth 2-d model with 2-d noise, random coefficients.
SdeModel random_smooth(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    const double a = g(rng), b = g(rng), c = g(rng), d = g(rng), e = g(rng);
    SdeModel m;
    m.dim_state = 2;
    m.dim_noise = 2;
    m.drift = [=](const Vec& x) { return vec({a * std::sin(x(1)) - x(0) * x(0) * x(0), b * x(0) * x(1) + c}); };
    m.diffusion = [=](const Vec& x) {
        Mat s(2, 2);
        s << d * std::cos(x(0)), 0.3, x(1) * x(1) * e, std::tanh(x(0) + x(1));
        return s;
    };
    return m;
}

PairField first_argument_only(const ScalarField& U) {
    PairField V;
    V.value = [U](const Vec& x, const Vec&) { return U.value(x); };
    V.dx = [U](const Vec& x, const Vec&) { return U.gradient(x); };
    V.dy = [](const Vec& x, const Vec&) { return Vec(Vec::Zero(x.size())); };
    V.dxx = [U](const Vec& x, const Vec&) { return U.hessian(x); };
    V.dxy = [](const Vec& x, const Vec&) { return Mat(Mat::Zero(x.size(), x.size())); };
    V.dyy = V.dxy;
    return V;
}

}  // namespace

TEST(ApplyOperators, ZeroDynamics) {
    const SdeModel m = testutil::affine_1d(0.0, 0.0, 0.0, 0.0);
    const auto ov = apply_operators(m, testutil::quadratic(2.0, 1), vec({1.3}));
    EXPECT_EQ(ov.gen, 0.0);
    EXPECT_EQ(ov.noise_row.norm(), 0.0);
}

TEST(ApplyOperators, OrnsteinUhlenbeckHandValue) {
    const SdeModel m = testutil::affine_1d(-1.0, 0.0, 0.0, std::sqrt(2.0));
    const auto ov = apply_operators(m, testutil::quadratic(1.0, 1), vec({1.0}));
    EXPECT_NEAR(ov.gen, 0.0, 1e-14);
    EXPECT_NEAR(ov.noise_row(0), 2.0 * std::sqrt(2.0), 1e-14);
    // 2 - 2 x^2 at another point.
    EXPECT_NEAR(apply_operators(m, testutil::quadratic(1.0, 1), vec({0.5})).gen, 1.5, 1e-14);
}

TEST(ApplyOperators, LangevinMomentIdentity) {
    const ZooEntry e = build_model(ZooName::langevin, {{"rho", 1.0}, {"eps", 1.0}, {"gamma", 1.0}});
    const ScalarField& U = e.lyapunov[0].field;
    const auto at = [&](const Vec& x) {
        const auto ov = apply_operators(e.model, U, x);
        return ov.gen + 0.5 * ov.noise_row.squaredNorm();
    };
    EXPECT_NEAR(at(vec({0.7, 0.0})), 0.5, 1e-13);
    EXPECT_NEAR(at(vec({-1.9, 0.0})), 0.5, 1e-13);
    // General x2: rho eps / 2 + rho (rho eps / 2 - gamma) x2^2 = 1/2 - x2^2 / 2.
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Vec x = testutil::uniform_in(e.box, rng);
        EXPECT_NEAR(at(x), 0.5 - 0.5 * x(1) * x(1), 1e-12);
    }
}

TEST(ApplyOperators, MatchesFiniteDifferenceGenerator) {
    std::mt19937_64 rng(5);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        for (const auto& L : e.lyapunov) {
            for (int i = 0; i < 20; ++i) {
                const Vec x = testutil::uniform_in(e.box, rng);
                const double an = apply_operators(e.model, L.field, x).gen;
                const double fd = testutil::fd_generator(e.model, L.field.value, x, 1e-4);
                EXPECT_LT(std::abs(an - fd) / (1.0 + std::abs(an)), 1e-5) << zoo_name(n) << " " << L.field.name;
            }
        }
    }
}

TEST(ApplyExtended, AdditiveNoiseHasNoExtendedNoise) {
    const SdeModel m = testutil::affine_1d(-0.5, 0.2, 0.0, 0.7);
    const PairField V = power_distance(identity_map(1), 2.0);
    const auto ov = apply_extended(m, V, vec({0.3}), vec({-1.1}));
    EXPECT_EQ(ov.extnoise_row.norm(), 0.0);
    EXPECT_EQ(ov.ratio_noise_sq, 0.0);
}

TEST(ApplyExtended, LinearDriftRatio) {
    const double c = -0.8;
    const SdeModel m = testutil::affine_1d(c, 0.0, 0.0, 0.0);
    const PairField V = power_distance(identity_map(1), 2.0);
    EXPECT_NEAR(apply_extended(m, V, vec({0.3}), vec({2.0})).ratio_gen, 2.0 * c, 1e-13);
}

TEST(ApplyExtended, ZeroOverZeroIsZero) {
    const SdeModel m = testutil::affine_1d(1.0, 0.0, 1.0, 0.0);
    const PairField V = power_distance(identity_map(1), 2.0);
    const auto ov = apply_extended(m, V, vec({0.4}), vec({0.4}));
    EXPECT_EQ(ov.ratio_gen, 0.0);
    EXPECT_EQ(ov.ratio_noise_sq, 0.0);
}

// Closed form for V = ||x - y||^2: extgen = 2<D, D mu> + ||D sigma||_F^2.
TEST(ApplyExtended, SquaredDistanceClosedForm) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const PairField V = power_distance(identity_map(2), 2.0);
    for (int k = 0; k < 50; ++k) {
        const SdeModel m = random_smooth(rng);
        const Vec x = vec({u(rng), u(rng)}), y = vec({u(rng), u(rng)});
        const Vec D = x - y;
        const Mat Ds = m.diffusion(x) - m.diffusion(y);
        const double closed = 2.0 * D.dot(m.drift(x) - m.drift(y)) + Ds.squaredNorm();
        EXPECT_NEAR(apply_extended(m, V, x, y).extgen, closed, 1e-10 * (1.0 + std::abs(closed)));
    }
}

TEST(PowerNormRatios, IdentityMatchesExtended) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const SdeModel m = random_smooth(rng);
    const PairField V = power_distance(identity_map(2), 2.0);
    for (int k = 0; k < 50; ++k) {
        const Vec x = vec({u(rng), u(rng)}), y = vec({u(rng), u(rng)});
        const auto [rg, rn] = power_norm_ratios(m, identity_map(2), 2.0, x, y);
        const auto ov = apply_extended(m, V, x, y);
        EXPECT_NEAR(rg, ov.ratio_gen, 1e-10 * (1.0 + std::abs(rg)));
        EXPECT_NEAR(rn, ov.ratio_noise_sq, 1e-10 * (1.0 + std::abs(rn)));
    }
}

TEST(PowerNormRatios, ZeroDynamics) {
    const SdeModel m = testutil::affine_1d(0.0, 0.0, 0.0, 0.0);
    const auto [rg, rn] = power_norm_ratios(m, identity_map(1), 2.0, vec({1.0}), vec({2.0}));
    EXPECT_EQ(rg, 0.0);
    EXPECT_EQ(rn, 0.0);
}

TEST(PowerNormRatios, CirSquareRootHasConstantNoise) {
    const ZooEntry e = build_model(ZooName::volatility);
    for (const double x : {0.1, 0.5, 2.0}) {
        const auto [rg, rn] = power_norm_ratios(e.model, power_map(1, 0.5), 2.0, vec({x}), vec({x + 0.37}));
        EXPECT_NEAR(rn, 0.0, 1e-14);
        EXPECT_TRUE(std::isfinite(rg));
    }
}

TEST(PowerNormRatios, CoincidentImagesThrow) {
    const SdeModel m = testutil::affine_1d(1.0, 0.0, 0.0, 0.0);
    EXPECT_THROW(power_norm_ratios(m, identity_map(1), 2.0, vec({1.0}), vec({1.0})), std::domain_error);
}

// Zoo (model, distance) pairs: the generic extended generator agrees with the
// closed-form ratios of the distance's map.
TEST(ZooDistances, ExtendedMatchesPowerNormRatios) {
    std::mt19937_64 rng(19);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        PhiMap phi = identity_map(e.model.dim_state);
        if (n == ZooName::volatility) phi = power_map(1, 1.0 - e.params.at("b"));
        if (n == ZooName::wright_fisher) continue;  // covered by PhiMapCompat below
        for (int k = 0; k < 1000; ++k) {
            const Vec x = testutil::uniform_in(e.box, rng), y = testutil::uniform_in(e.box, rng);
            const auto ov = apply_extended(e.model, e.distance, x, y);
            const auto [rg, rn] = power_norm_ratios(e.model, phi, 2.0, x, y);
            EXPECT_NEAR(ov.ratio_gen, rg, 1e-9 * (1.0 + std::abs(rg))) << zoo_name(n);
            EXPECT_NEAR(ov.ratio_noise_sq, rn, 1e-9 * (1.0 + std::abs(rn))) << zoo_name(n);
        }
    }
}

TEST(ApplyExtended, FirstArgumentOnlyReducesToGenerator) {
    std::mt19937_64 rng(23);
    for (const ZooName n : {ZooName::van_der_pol, ZooName::lorenz, ZooName::langevin, ZooName::sir}) {
        const ZooEntry e = build_model(n);
        const ScalarField& U = e.lyapunov[0].field;
        const PairField V = first_argument_only(U);
        for (int k = 0; k < 20; ++k) {
            const Vec x = testutil::uniform_in(e.box, rng), y = testutil::uniform_in(e.box, rng);
            const auto a = apply_operators(e.model, U, x);
            const auto b = apply_extended(e.model, V, x, y);
            EXPECT_EQ(a.gen, b.extgen) << zoo_name(n);
            EXPECT_EQ((a.noise_row - b.extnoise_row).norm(), 0.0) << zoo_name(n);
        }
    }
}

TEST(ApplyExtended, SymmetricDistanceSwapInvariance) {
    std::mt19937_64 rng(29);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        for (int k = 0; k < 50; ++k) {
            const Vec x = testutil::uniform_in(e.box, rng), y = testutil::uniform_in(e.box, rng);
            const double a = apply_extended(e.model, e.distance, x, y).extgen;
            const double b = apply_extended(e.model, e.distance, y, x).extgen;
            EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a))) << zoo_name(n);
        }
    }
}

TEST(PairFieldDerivatives, ZooDistancesConsistent) {
    std::mt19937_64 rng(31);
    for (const ZooName n : all_zoo_names()) {
        const ZooEntry e = build_model(n);
        for (int k = 0; k < 100; ++k) {
            const Vec x = testutil::uniform_in(e.box, rng), y = testutil::uniform_in(e.box, rng);
            EXPECT_LT(fd_consistency(e.distance, x, y, 1e-4), 1e-5) << zoo_name(n);
        }
    }
}

TEST(TwoPointTerms, AgreeWithRatios) {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const SdeModel m = random_smooth(rng);
    const PairField V = power_distance(identity_map(2), 2.0);
    for (int k = 0; k < 20; ++k) {
        const Vec x = vec({u(rng), u(rng)}), y = vec({u(rng), u(rng)});
        const auto t = two_point_terms(m, x, y);
        const auto ov = apply_extended(m, V, x, y);
        // ratio_gen = 2 drift, ratio_noise_sq = 4 noise for V = ||D||^2.
        EXPECT_NEAR(ov.ratio_gen, 2.0 * t.drift, 1e-10 * (1.0 + std::abs(ov.ratio_gen)));
        EXPECT_NEAR(ov.ratio_noise_sq, 4.0 * t.noise, 1e-10 * (1.0 + ov.ratio_noise_sq));
    }
}
