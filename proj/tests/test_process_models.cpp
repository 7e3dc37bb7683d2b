#include <gtest/gtest.h>

#include <cmath>

#include "heavysum/errors.hpp"
#include "heavysum/ks.hpp"
#include "heavysum/process_models.hpp"
#include "heavysum/random.hpp"

using namespace heavysum;

TEST(Noise, ParetoQuantile) {
    EXPECT_DOUBLE_EQ(pareto_quantile(0.25, 0.5), 16.0);
}

TEST(Noise, RejectsAlphaAtBoundaries) {
    EXPECT_THROW(sample_noise(NoiseSpec::pareto(2.0), 10, 1), ConfigError);
    EXPECT_THROW(sample_noise(NoiseSpec::pareto(1.0), 10, 1), ConfigError);
    EXPECT_THROW(NoiseSpec::pareto(0.5, 1.5).validate(), ConfigError);
}

TEST(Noise, ParetoTail) {
    const Eigen::VectorXd z = sample_noise(NoiseSpec::pareto(0.5, 0.5), 1'000'000, 7);
    for (double level : {2.0, 5.0, 10.0}) {
        const double expect = std::pow(level, -0.5);
        const double freq = (z.array().abs() > level).cast<double>().mean();
        const double se = std::sqrt(expect * (1.0 - expect) / 1e6);
        EXPECT_LE(std::abs(freq - expect), 4.0 * se) << "z=" << level;
    }
    EXPECT_NEAR((z.array() > 0.0).cast<double>().mean(), 0.5, 0.002);
}

TEST(Noise, StableIsSymmetric) {
    const Eigen::VectorXd z = sample_noise(NoiseSpec::symmetric_stable(1.5), 200'000, 3);
    EXPECT_NEAR((z.array() > 0.0).cast<double>().mean(), 0.5, 0.005);
    // P(|Z| > x) ~ C x^{-alpha} with C = tail_constant().
    const double x = 30.0;
    const double freq = (z.array().abs() > x).cast<double>().mean();
    EXPECT_NEAR(freq / (NoiseSpec::symmetric_stable(1.5).tail_constant() * std::pow(x, -1.5)), 1.0, 0.15);
}

TEST(Paths, Deterministic) {
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8, 0.7), -0.6);
    const Path a = sample_path(model, 500, 42, 3);
    const Path b = sample_path(model, 500, 42, 3);
    const Path c = sample_path(model, 500, 42, 4);
    EXPECT_TRUE(a.values == b.values);
    EXPECT_FALSE(a.values == c.values);
}

TEST(Paths, IidEqualsNoise) {
    const auto spec = NoiseSpec::pareto(0.5, 0.3);
    const Path p = sample_path(ProcessModel::iid(spec), 1000, 99);
    EXPECT_TRUE(p.values == sample_noise(spec, 1000, 99));
}

TEST(Paths, Ar1DirectRecursion) {
    const Eigen::Vector3d z(1.0, 1.0, 1.0);
    const Eigen::VectorXd x = ar1_recursion(0.5, 0.0, z);
    EXPECT_DOUBLE_EQ(x(0), 1.0);
    EXPECT_DOUBLE_EQ(x(1), 1.5);
    EXPECT_DOUBLE_EQ(x(2), 1.75);
}

TEST(Paths, SreWithZeroMultiplierIsIidB) {
    SreLaw law;
    law.a_kind = SreLaw::AKind::constant;
    law.a_value = 0.0;
    law.b_kind = SreLaw::BKind::noise;
    law.b_noise = NoiseSpec::pareto(0.7);
    const auto model = ProcessModel::sre_model(law, 0.7, 50);
    const Path p = sample_path(model, 200, 5);
    Philox rng = make_stream(5, 0);
    stationary_start(model, rng);
    for (Eigen::Index t = 0; t < 200; ++t) {
        EXPECT_EQ(p.values(t), law.draw(rng).second);
    }
}

TEST(Paths, SreKestenConditionChecked) {
    SreLaw law;
    law.a_mu = -0.3;  // E|A|^0.5 != 1
    EXPECT_THROW(ProcessModel::sre_model(law, 0.5), ModelError);
    SreLaw good;  // mu = -alpha sigma^2 / 2 with alpha = 1.5, sigma = 0.5
    EXPECT_NO_THROW(ProcessModel::sre_model(good, 1.5));
}

TEST(Coupling, Ar1DifferenceIsGeometric) {
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8, 0.5), 0.5);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const CoupledPaths cp = sample_coupled_paths(model, 40, 11, s);
        const double d0 = cp.path.values(0) - cp.coupled.values(0);
        for (Eigen::Index t = 0; t < 40; ++t) {
            const double scale = std::max(std::abs(cp.path.values(t)), std::abs(cp.coupled.values(t)));
            EXPECT_NEAR(cp.path.values(t) - cp.coupled.values(t), std::pow(0.5, t) * d0, 1e-12 * (1.0 + scale));
        }
    }
}

TEST(Coupling, SreConstantMultiplier) {
    SreLaw law;
    law.a_kind = SreLaw::AKind::constant;
    law.a_value = -0.7;
    law.b_kind = SreLaw::BKind::noise;
    law.b_noise = NoiseSpec::pareto(1.5, 0.5);
    const auto model = ProcessModel::sre_model(law, 1.5, 200);
    const CoupledPaths cp = sample_coupled_paths(model, 30, 1);
    const double d0 = cp.path.values(0) - cp.coupled.values(0);
    for (Eigen::Index t = 0; t < 30; ++t) {
        EXPECT_NEAR(cp.path.values(t) - cp.coupled.values(t), std::pow(-0.7, t) * d0, 1e-9 * (1.0 + std::abs(d0)));
    }
}

TEST(Coupling, IidUnsupported) {
    EXPECT_THROW(sample_coupled_paths(ProcessModel::iid(NoiseSpec::pareto(0.5)), 10, 1), UnsupportedError);
}

TEST(Coupling, MarginalsAgree) {
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8, 0.5), 0.5, 200);
    Eigen::VectorXd a(10'000), b(10'000);
    for (std::uint64_t i = 0; i < 10'000; ++i) {
        const CoupledPaths cp = sample_coupled_paths(model, 6, 77, i);
        a(i) = cp.path.values(5);
        b(i) = cp.coupled.values(5);
    }
    EXPECT_LT(ks_distance(a, b), ks_critical_value(10'000, 10'000, 0.01));
}

TEST(Normalization, ClosedForms) {
    EXPECT_DOUBLE_EQ(normalizing_an(ProcessModel::iid(NoiseSpec::pareto(0.5)), 1e4), 1e8);
    const auto ar = ProcessModel::ar1(NoiseSpec::pareto(1.5), 0.5);
    const double expect = std::pow(1e4 / (1.0 - std::pow(0.5, 1.5)), 2.0 / 3.0);
    EXPECT_NEAR(normalizing_an(ar, 1e4), expect, 1e-9 * expect);
}

TEST(Normalization, Ar1AgreesWithEmpiricalQuantile) {
    const auto ar = ProcessModel::ar1(NoiseSpec::pareto(1.5), 0.5);
    const double a = normalizing_an(ar, 1e3);
    const Path p = sample_path(ar, 2'000'000, 3);
    const double count = (p.values.array().abs() > a).cast<double>().sum();
    // n P(|X| > a_n) -> 1, so 2e6 / 1e3 = 2000 exceedances up to slowly varying error.
    EXPECT_NEAR(count / 2000.0, 1.0, 0.15);
}

TEST(Normalization, SreSelfConsistent) {
    const auto model = ProcessModel::sre_model(SreLaw{}, 1.5);
    const double a = normalizing_an(model, 1e3, 1'000'000, 17);
    const Path held_out = sample_path(model, 1'000'000, 18);
    const double ratio = 1e3 * (held_out.values.array().abs() > a).cast<double>().mean();
    EXPECT_GE(ratio, 0.8);
    EXPECT_LE(ratio, 1.2);
}

TEST(StationaryMean, Values) {
    EXPECT_DOUBLE_EQ(stationary_mean(ProcessModel::iid(NoiseSpec::pareto(1.5, 0.5))), 0.0);
    EXPECT_DOUBLE_EQ(stationary_mean(ProcessModel::iid(NoiseSpec::symmetric_stable(1.5))), 0.0);
    EXPECT_NEAR(stationary_mean(ProcessModel::iid(NoiseSpec::pareto(1.5))), 3.0, 1e-12);
    EXPECT_NEAR(stationary_mean(ProcessModel::ar1(NoiseSpec::pareto(1.5), 0.5)), 6.0, 1e-12);
    EXPECT_THROW(stationary_mean(ProcessModel::iid(NoiseSpec::pareto(0.5))), UnsupportedError);
}

TEST(Models, Ar1Domain) {
    EXPECT_THROW(ProcessModel::ar1(NoiseSpec::pareto(0.5), 1.0), ConfigError);
    EXPECT_THROW(ProcessModel::ar1(NoiseSpec::pareto(0.5), 0.0), ConfigError);
}
