#include <gtest/gtest.h>

#include <cmath>

#include "heavysum/diagnostics.hpp"
#include "heavysum/errors.hpp"

using namespace heavysum;

namespace {

ProcessModel zero_sre(double alpha) {
    SreLaw law;
    law.a_kind = SreLaw::AKind::constant;
    law.a_value = 0.0;
    law.b_kind = SreLaw::BKind::noise;
    law.b_noise = NoiseSpec::pareto(alpha);
    return ProcessModel::sre_model(law, alpha, 10);
}

} // namespace

TEST(Coupling, Ar1Slope) {
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8), 0.5);
    const DecaySeries s = coupling_decay(model, 0.4, 20, 10'000, 3);
    ASSERT_EQ(s.values.size(), 21);
    EXPECT_GT(s.values(0), 0.0);
    EXPECT_NEAR(s.fitted_log_slope / (0.4 * std::log(0.5)), 1.0, 0.10);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
        EXPECT_GE(s.values(i), 0.0);
    }
}

TEST(Coupling, SreZeroMultiplierCouplesInOneStep) {
    const DecaySeries s = coupling_decay(zero_sre(0.7), 0.3, 5, 200, 1);
    EXPECT_GT(s.values(0), 0.0);
    for (Eigen::Index t = 1; t < s.values.size(); ++t) {
        EXPECT_EQ(s.values(t), 0.0);
    }
}

TEST(Coupling, Preconditions) {
    EXPECT_THROW(coupling_decay(ProcessModel::iid(NoiseSpec::pareto(0.5)), 0.3, 5, 10, 1), UnsupportedError);
    EXPECT_THROW(coupling_decay(ProcessModel::ar1(NoiseSpec::pareto(0.5), 0.5), 0.6, 5, 10, 1), ConfigError);
}

TEST(Anticluster, DefaultBlockSize) {
    EXPECT_EQ(default_rn(100'000), static_cast<int>(std::floor(std::pow(1e5, 0.4))));
}

TEST(Anticluster, EmptySumAndDomain) {
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8), 0.5);
    const DecaySeries s = anticluster_stat(model, 1000, 10, {11}, 1.0, 50, 1);
    EXPECT_EQ(s.values(0), 0.0);
    EXPECT_THROW(anticluster_stat(model, 1000, 1000, {1}, 1.0, 50, 1), ConfigError);
}

TEST(Anticluster, IidOrderRnOverN) {
    // n r_n (E[|X/a_n| ^ 1])^2 with E[|X/a_n| ^ 1] = a_n^{-a} / (1 - a) - a / ((1 - a) a_n).
    const double a = 0.5;
    const std::int64_t n = 10'000;
    const int rn = default_rn(n);
    const auto model = ProcessModel::iid(NoiseSpec::pareto(a));
    const double an = normalizing_an(model, static_cast<double>(n));
    const double m1 = std::pow(an, -a) / (1.0 - a) - a / ((1.0 - a) * an);
    const double expect = static_cast<double>(n) * rn * m1 * m1;
    const DecaySeries s = anticluster_stat(model, n, rn, {1}, 1.0, 400, 9);
    EXPECT_LE(std::abs(s.values(0) - expect), 4.0 * s.std_errors(0)) << s.values(0) << " vs " << expect;
    EXPECT_LT(s.values(0), 0.05);
}

TEST(Anticluster, Ar1DecreasesInKAndN) {
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8), 0.5);
    const std::vector<int> k{1, 2, 4, 8, 16};
    const DecaySeries small = anticluster_stat(model, 10'000, 40, k, 1.0, 400, 1);
    const DecaySeries large = anticluster_stat(model, 100'000, 40, k, 1.0, 40, 2);
    for (Eigen::Index i = 1; i < small.values.size(); ++i) {
        EXPECT_LE(small.values(i), small.values(i - 1));
        EXPECT_LE(large.values(i), large.values(i - 1));
    }
    // Beyond the cluster extent the O(r_n / n) part dominates and the drop in n is clear;
    // at k = 1 the heavy-tailed noise only allows a "no significant increase" check.
    EXPECT_LT(large.values(3), small.values(3));
    EXPECT_LT(large.values(4), small.values(4));
    EXPECT_LE(large.values(0), small.values(0) + 3.0 * std::hypot(small.std_errors(0), large.std_errors(0)));
}

TEST(CoupledAnticluster, Cases) {
    const DecaySeries z = coupled_anticluster_stat(zero_sre(0.7), 1000, 10, {1, 2, 5}, 0.3, 20, 1);
    for (Eigen::Index i = 0; i < z.values.size(); ++i) {
        EXPECT_EQ(z.values(i), 0.0);
    }
    const auto model = ProcessModel::ar1(NoiseSpec::pareto(0.8), 0.5);
    const DecaySeries s = coupled_anticluster_stat(model, 10'000, 200, {1, 2, 4, 8, 16}, 0.4, 50, 3);
    EXPECT_LT(s.fitted_log_slope, 0.0);
    const DecaySeries far = coupled_anticluster_stat(model, 10'000, 200, {150}, 0.4, 20, 4);
    EXPECT_LT(far.values(0), 1e-15);
}

TEST(Fit, ExactGeometric) {
    DecaySeries s;
    s.index = {0, 1, 2, 3, 4};
    s.values.resize(5);
    for (int i = 0; i < 5; ++i) {
        s.values(i) = 3.0 * std::exp(-0.7 * i);
    }
    fit_log_slope(s, 0);
    EXPECT_NEAR(s.fitted_log_slope, -0.7, 1e-12);
    EXPECT_NEAR(std::exp(s.fitted_intercept), 3.0, 1e-12);
    EXPECT_NEAR(s.r2, 1.0, 1e-12);
}
