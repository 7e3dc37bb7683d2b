#include "heavysum/oracles.hpp"

#include <cmath>

#include "heavysum/errors.hpp"
#include "heavysum/quadrature.hpp"

namespace heavysum {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0) || alpha == 1.0) {
        throw ConfigError("oracle needs alpha in (0,1) or (1,2)");
    }
}

void check_model_alpha(const ClusterModel& cluster, double alpha) {
    if (std::abs(cluster.alpha() - alpha) > 1e-12) {
        throw ConfigError("alpha does not match the cluster model's tail index");
    }
}

ClusterLaw law_of(const ClusterModel& cluster) {
    return cluster.law();
}

Estimate scaled(const Estimate& e, double factor, const std::string& method) {
    return Estimate{e.estimate * factor, e.std_error * std::abs(factor), e.reps, method};
}

} // namespace

MomentReport compare_moment(std::string name, const Estimate& analytic, const Estimate& mc,
                            std::map<std::string, double> components) {
    MomentReport r;
    r.name = std::move(name);
    r.analytic_value = analytic.estimate;
    r.analytic_std_error = analytic.std_error;
    r.components = std::move(components);
    r.mc_value = mc.estimate;
    r.std_error = mc.std_error;
    r.reps = mc.reps;
    const double se = std::hypot(analytic.std_error, mc.std_error);
    const double diff = mc.estimate - analytic.estimate;
    r.z_score = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    return r;
}

Estimate expected_ratio_max(const ClusterLaw& law, double alpha) {
    check_alpha(alpha);
    const ClusterLaw tilted = law.tilted();
    const Estimate sum = tilted.expect([](const ClusterShape& q) { return q.sum(); });
    return scaled(sum, 1.0 / (1.0 - alpha), law.exact ? "closed_form" : "monte_carlo");
}

Estimate expected_ratio_max(const ClusterModel& cluster, double alpha) {
    check_model_alpha(cluster, alpha);
    return expected_ratio_max(law_of(cluster), alpha);
}

Estimate tilted_sum_mc(const ClusterModel& cluster, std::size_t count, std::uint64_t seed) {
    const TiltedBatch batch = sample_tilted_clusters(cluster, cluster.default_horizon(), count, seed);
    RunningStats acc;
    for (const auto& q : batch.draws) {
        acc.add(q.sum());
    }
    return acc.to_estimate("tilted_rejection");
}

Estimate expected_ratio_student(const ClusterLaw& law, double alpha, double p) {
    check_alpha(alpha);
    if (!(p > alpha)) {
        throw ConfigError("studentized oracle needs p > alpha");
    }
    const double g = std::tgamma((1.0 - alpha) / p) / (std::tgamma(1.0 / p) * std::tgamma(1.0 - alpha / p));
    const double norm_moment =
        law.expect([&](const ClusterShape& q) { return std::pow(q.pnorm_pow(p), alpha / p); }).estimate;
    const Estimate factor = law.expect([&](const ClusterShape& q) {
        const double np = std::pow(q.pnorm_pow(p), 1.0 / p);
        return std::pow(np, alpha) / norm_moment * q.sum() / np;
    });
    const std::string method = alpha > 1.0 ? "experimental" : (law.exact ? "closed_form" : "monte_carlo");
    return scaled(factor, g, method);
}

Estimate expected_ratio_student(const ClusterModel& cluster, double alpha, double p) {
    check_model_alpha(cluster, alpha);
    return expected_ratio_student(law_of(cluster), alpha, p);
}

Estimate expected_ratio_student_hat(const ClusterLaw& law, double alpha) {
    check_alpha(alpha);
    const ClusterLaw hat = law.reweighted(
        [&](const ClusterShape& q) { return std::pow(q.pnorm_pow(2.0), alpha / 2.0); },
        [](const ClusterShape& q) { return q.scaled(1.0 / std::sqrt(q.pnorm_pow(2.0))); });
    const double g = std::tgamma((1.0 - alpha) / 2.0) / (std::tgamma(0.5) * std::tgamma(1.0 - alpha / 2.0));
    const Estimate sum = hat.expect([](const ClusterShape& q) { return q.sum(); });
    return scaled(sum, g, alpha > 1.0 ? "experimental" : (law.exact ? "closed_form" : "monte_carlo"));
}

Estimate expected_greenwood(const ClusterLaw& law, double alpha, double p) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("Greenwood oracle needs alpha in (0,1)");
    }
    if (!(p > alpha)) {
        throw ConfigError("Greenwood oracle needs p > alpha");
    }
    for (const auto& q : law.shapes) {
        if (q.values.minCoeff() < 0.0 || q.tail_ratio < 0.0) {
            throw ConfigError("Greenwood oracle needs a nonnegative cluster");
        }
    }
    const double g = std::tgamma(p - alpha) / (std::tgamma(p) * std::tgamma(1.0 - alpha));
    const double l1_moment =
        law.expect([&](const ClusterShape& q) { return std::pow(q.pnorm_pow(1.0), alpha); }).estimate;
    const Estimate factor = law.expect([&](const ClusterShape& q) {
        const double l1 = q.pnorm_pow(1.0);
        return std::pow(l1, alpha) / l1_moment * q.pnorm_pow(p) / std::pow(l1, p);
    });
    return scaled(factor, g, law.exact ? "closed_form" : "monte_carlo");
}

Estimate expected_greenwood(const ClusterModel& cluster, double alpha, double p) {
    check_model_alpha(cluster, alpha);
    return expected_greenwood(law_of(cluster), alpha, p);
}

Estimate expected_kurtosis_limit(const ClusterLaw& law, double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) {
        throw ConfigError("kurtosis oracle needs alpha in (0,2)");
    }
    // (Q_t^2) is the cluster of (X_t^2): sum_t (Q_t^2)^{alpha/2} = 1 already.
    ClusterLaw squared;
    squared.exact = law.exact;
    squared.alpha = alpha / 2.0;
    squared.weights = law.weights;
    for (const auto& q : law.shapes) {
        squared.shapes.push_back(ClusterShape{q.values.array().square().matrix(), q.tail_ratio * q.tail_ratio});
    }
    return expected_greenwood(squared, alpha / 2.0, 2.0);
}

Estimate expected_kurtosis_limit(const ClusterModel& cluster, double alpha) {
    check_model_alpha(cluster, alpha);
    return expected_kurtosis_limit(law_of(cluster), alpha);
}

std::vector<GammaIdentityRow> gamma_identity_check(double p, const std::vector<double>& xs) {
    if (!(p > 0.0)) {
        throw ConfigError("gamma identity needs p > 0");
    }
    std::vector<GammaIdentityRow> rows;
    const double factor = p / std::tgamma(1.0 / p);
    for (double x : xs) {
        if (!(x > 0.0)) {
            throw ConfigError("gamma identity needs x > 0");
        }
        QuadOptions opt;
        opt.abs_tol = 1e-15;
        opt.rel_tol = 1e-12;
        opt.max_intervals = 20000;
        const auto res = integrate_to_infinity([&](double l) { return std::exp(-std::pow(l, p) * x); }, 0.0, opt);
        GammaIdentityRow row;
        row.x = x;
        row.quadrature = factor * res.value;
        row.closed_form = std::pow(x, -1.0 / p);
        row.rel_error = std::abs(row.quadrature - row.closed_form) / row.closed_form;
        rows.push_back(row);
    }
    return rows;
}

} // namespace heavysum
