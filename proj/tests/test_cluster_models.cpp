#include <gtest/gtest.h>

#include <cmath>

#include "heavysum/cluster_models.hpp"
#include "heavysum/errors.hpp"
#include "heavysum/random.hpp"

using namespace heavysum;

namespace {

double within_se(const Estimate& a, const Estimate& b) {
    const double se = std::hypot(a.std_error, b.std_error);
    const double d = std::abs(a.estimate - b.estimate);
    return se > 0.0 ? d / se : (d < 1e-12 ? 0.0 : INFINITY);
}

} // namespace

TEST(TailProcess, IidIsSingleSpike) {
    const auto m = ClusterModel::iid(0.5, 0.3);
    int plus = 0;
    for (std::uint64_t s = 0; s < 20'000; ++s) {
        const TailProcessDraw d = sample_spectral_tail(m, 5, 1, s);
        ASSERT_EQ(d.t_min, 0);
        ASSERT_EQ(d.t_max, 0);
        ASSERT_EQ(std::abs(d.values(0)), 1.0);
        plus += d.values(0) > 0.0;
    }
    EXPECT_NEAR(plus / 20'000.0, 0.3, 3.0 * std::sqrt(0.3 * 0.7 / 20'000.0));
}

TEST(TailProcess, Ar1LagLaw) {
    const auto m = ClusterModel::ar1(0.5, 1.0);
    const int h = m.default_horizon();
    int j0 = 0, j1 = 0;
    const int reps = 100'000;
    Philox rng(2024, 0);
    for (int i = 0; i < reps; ++i) {
        const TailProcessDraw d = m.draw_tail(rng, h);
        ASSERT_EQ(std::abs(d.at(0)), 1.0);
        j0 += d.t_min == 0;
        j1 += d.t_min == -1;
    }
    EXPECT_NEAR(j0 / double(reps), 0.5, 3.0 * std::sqrt(0.25 / reps));
    EXPECT_NEAR(j1 / double(reps), 0.25, 3.0 * std::sqrt(0.25 * 0.75 / reps));
}

TEST(TailProcess, Ar1GeometricShape) {
    const auto m = ClusterModel::ar1(-0.6, 0.8, 0.7);
    const TailProcessDraw d = sample_spectral_tail(m, 30, 9);
    for (int t = d.t_min; t < d.t_max; ++t) {
        EXPECT_NEAR(d.at(t + 1), -0.6 * d.at(t), 1e-15);
    }
}

TEST(Cluster, NormalizationAndMaximum) {
    for (const auto& m : {ClusterModel::iid(0.5), ClusterModel::ar1(0.5, 0.8), ClusterModel::ar1(-0.9, 1.5, 0.3)}) {
        const double qmax = m.kind() == ClusterKind::iid ? 1.0 : std::pow(1.0 - std::pow(std::abs(m.phi()), m.alpha()), 1.0 / m.alpha());
        for (std::uint64_t s = 0; s < 200; ++s) {
            const ClusterDraw q = sample_cluster(m, m.default_horizon(), 3, s);
            const double mass = q.pnorm_pow(m.alpha());
            EXPECT_LE(mass, 1.0 + 1e-12);
            EXPECT_GE(mass, 1.0 - q.truncation_error - 1e-12);
            EXPECT_NEAR(q.max_abs(), qmax, 1e-12);
        }
    }
}

TEST(Cluster, IidIsUnitSpike) {
    const ClusterDraw q = sample_cluster(ClusterModel::iid(0.5), 0, 1);
    ASSERT_EQ(q.values.size(), 1);
    EXPECT_EQ(q.values(0), 1.0);
}

TEST(Cluster, Ar1SignProbabilities) {
    const auto pos = ClusterModel::ar1(0.5, 0.5, 0.7);
    EXPECT_DOUBLE_EQ(pos.p_plus(), 0.7);
    EXPECT_NEAR(pos.p_plus() + pos.p_minus(), 1.0, 1e-15);
    const auto neg = ClusterModel::ar1(-0.5, 0.5, 0.7);
    const double r = std::pow(0.5, 0.5);
    EXPECT_NEAR(neg.p_plus(), (0.7 + 0.3 * r) / (1.0 + r), 1e-15);
}

TEST(Cluster, EmpiricalBlocks) {
    const auto src = ProcessModel::ar1(NoiseSpec::pareto(0.8), 0.5);
    EmpiricalClusterOptions opt;
    opt.path_length = 400'000;
    opt.threshold_quantile = 0.999;
    opt.half_width = 20;
    const auto m = ClusterModel::empirical(src, opt, 5);
    ASSERT_FALSE(m.bank().empty());
    for (const auto& q : m.bank()) {
        EXPECT_NEAR(q.pnorm_pow(0.8), 1.0, 1e-12);
        EXPECT_LE(q.max_abs(), 1.0 + 1e-15);
    }
    EXPECT_NEAR(extremal_index(m).estimate, 1.0 - std::pow(0.5, 0.8), 0.06);
}

TEST(Cluster, EmpiricalWithoutExceedances) {
    const auto src = ProcessModel::iid(NoiseSpec::pareto(0.8));
    EmpiricalClusterOptions opt;
    opt.path_length = 1000;
    opt.half_width = 10;
    opt.threshold_quantile = 0.9995;  // threshold is the sample maximum: nothing exceeds it
    EXPECT_THROW(ClusterModel::empirical(src, opt, 1), SamplingError);
    opt.threshold_quantile = 1.0;
    EXPECT_THROW(ClusterModel::empirical(src, opt, 1), ConfigError);
}

TEST(Tilted, IidAcceptsEverything) {
    const auto m = ClusterModel::iid(0.5);
    const Estimate rate = tilted_acceptance_rate(m, 10'000, 1);
    EXPECT_EQ(rate.estimate, 1.0);
    const TiltedClusterDraw q = sample_tilted_cluster(m, 0, 1);
    EXPECT_EQ(q.proposals, 1);
    EXPECT_EQ(q.values(0), 1.0);
}

TEST(Tilted, Ar1AcceptanceAndSum) {
    const auto m = ClusterModel::ar1(0.5, 0.5);
    const Estimate rate = tilted_acceptance_rate(m, 100'000, 2);
    EXPECT_LE(std::abs(rate.estimate - (1.0 - std::sqrt(0.5))), 3.0 * rate.std_error);
    const TiltedBatch b = sample_tilted_clusters(m, m.default_horizon(), 500, 3);
    for (const auto& q : b.draws) {
        EXPECT_NEAR(q.max_abs(), 1.0, 1e-15);
        EXPECT_NEAR(q.sum(), 2.0, 1e-9);
    }
}

TEST(Tilted, ChangeOfMeasure) {
    // E h(Qtilde) = E[max|Q|^a h(Q / max|Q|)] / theta for bounded h.
    const auto m = ClusterModel::ar1(-0.7, 0.6, 0.6);
    const int h = m.default_horizon();
    const TiltedBatch b = sample_tilted_clusters(m, h, 40'000, 11);
    RunningStats lhs, rhs;
    for (const auto& q : b.draws) {
        lhs.add(std::atan(q.sum()));
    }
    Philox rng(12, 0);
    const double theta = extremal_index(m).estimate;
    for (int i = 0; i < 40'000; ++i) {
        const ClusterDraw q = m.draw_cluster(rng, h);
        const double mx = q.max_abs();
        rhs.add(std::pow(mx, 0.6) * std::atan(q.sum() / mx) / theta);
    }
    EXPECT_LE(within_se(lhs.to_estimate("mc"), rhs.to_estimate("mc")), 3.0);
}

TEST(ExtremalIndex, ClosedForms) {
    EXPECT_EQ(extremal_index(ClusterModel::iid(0.5)).estimate, 1.0);
    EXPECT_DOUBLE_EQ(extremal_index(ClusterModel::ar1(0.5, 1.0)).estimate, 0.5);
    SreLaw law;
    law.a_kind = SreLaw::AKind::constant;
    law.a_value = 0.0;
    law.b_kind = SreLaw::BKind::noise;
    law.b_noise = NoiseSpec::pareto(0.7);
    EXPECT_EQ(sre_extremal_index(ProcessModel::sre_model(law, 0.7, 10), 1000, 1).estimate, 1.0);
}

TEST(ExtremalIndex, ThreeEstimatorsAgree) {
    const auto m = ClusterModel::ar1(-0.5, 0.8, 0.6);
    const Estimate closed = extremal_index(m);
    const Estimate rate = tilted_acceptance_rate(m, 50'000, 4);
    const Estimate moment = extremal_index_from_clusters(m, 50'000, 5);
    EXPECT_LE(within_se(closed, rate), 3.0);
    EXPECT_LE(within_se(closed, moment), 3.0);
}

TEST(ExtremalIndex, SreMonteCarlo) {
    const auto model = ProcessModel::sre_model(SreLaw{}, 1.5);
    const Estimate e = sre_extremal_index(model, 20'000, 3);
    EXPECT_GT(e.estimate, 0.0);
    EXPECT_LT(e.estimate, 1.0);
    EXPECT_GT(e.std_error, 0.0);
}

TEST(ClusterMoment, Values) {
    EXPECT_NEAR(cluster_moment(ClusterModel::ar1(0.5, 0.5), 0.5).estimate, 1.0, 1e-12);
    EXPECT_NEAR(cluster_moment(ClusterModel::iid(0.5), 3.0).estimate, 1.0, 1e-15);
    const auto m = ClusterModel::ar1(0.5, 0.5);
    const double closed = (1.0 - std::sqrt(0.5)) / std::pow(0.75, 0.25);
    EXPECT_NEAR(cluster_moment(m, 2.0).estimate, closed, 1e-14);
    Philox rng(8, 0);
    RunningStats acc;
    for (int i = 0; i < 20'000; ++i) {
        acc.add(std::pow(m.draw_cluster(rng, m.default_horizon()).pnorm_pow(2.0), 0.25));
    }
    EXPECT_NEAR(acc.mean(), closed, 1e-9);  // ||Q||_2 is deterministic for positive phi
}

TEST(ClusterMoment, EmpiricalNeedsPAboveAlpha) {
    const auto src = ProcessModel::iid(NoiseSpec::pareto(0.8));
    EmpiricalClusterOptions opt;
    opt.path_length = 100'000;
    opt.half_width = 5;
    const auto m = ClusterModel::empirical(src, opt, 2);
    EXPECT_THROW(cluster_moment(m, 0.5), UnsupportedError);
    EXPECT_NO_THROW(cluster_moment(m, 2.0));
}

TEST(TimeChange, IidIsVacuous) {
    const std::vector<WindowFunctional> fns{{"one", [](const Eigen::VectorXd&) { return 1.0; }, 1.0}};
    const TimeChangeReport r = verify_time_change(ClusterModel::iid(0.5), 1, fns, 1000, 1);
    EXPECT_TRUE(r.vacuous);
}

TEST(TimeChange, Ar1IdentityAndLagOne) {
    const auto m = ClusterModel::ar1(0.5, 1.0, 0.6);
    const std::vector<WindowFunctional> fns{
        {"sign", [](const Eigen::VectorXd& w) { return w(w.size() / 2) > 0.0 ? 1.0 : 0.0; }, 1.0},
        {"atan", [](const Eigen::VectorXd& w) { return std::atan(w.sum()); }, 2.0}};
    for (int t : {0, 1, -1}) {
        const TimeChangeReport r = verify_time_change(m, t, fns, 100'000, 21);
        EXPECT_FALSE(r.vacuous);
        for (const auto& row : r.rows) {
            EXPECT_LE(std::abs(row.z), 3.0) << "t=" << t << " " << row.functional;
        }
    }
}

TEST(TimeChange, RejectsUnboundedFunctional) {
    const std::vector<WindowFunctional> fns{{"sum", [](const Eigen::VectorXd& w) { return w.sum() * 1e6; }, 1.0}};
    EXPECT_THROW(verify_time_change(ClusterModel::ar1(0.5, 1.0, 0.5), 1, fns, 1000, 1), ConfigError);
}

TEST(Summability, Ar1ProfileIsCauchy) {
    const auto m = ClusterModel::ar1(0.5, 0.8);
    const int cutoff = tail_summability_cutoff(m, 1e-6);
    const Eigen::VectorXd prof = tail_summability_profile(m, cutoff + 40);
    for (Eigen::Index k = cutoff + 1; k < prof.size(); ++k) {
        EXPECT_LT(prof(k) - prof(k - 1), 1e-6);
        EXPECT_GE(prof(k) - prof(k - 1), 0.0);
    }
}

TEST(Blocks, IidPathHasIndexNearOne) {
    const Eigen::VectorXd x = sample_path(ProcessModel::iid(NoiseSpec::pareto(0.8)), 1'000'000, 3).values;
    const Estimate e = blocks_extremal_index(x, std::pow(1e-3, -1.0 / 0.8), 100);
    EXPECT_NEAR(e.estimate, 1.0, 0.1);
}
