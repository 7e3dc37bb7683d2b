#pragma once

#include <map>
#include <string>
#include <vector>

#include "heavysum/cluster_models.hpp"
#include "heavysum/estimate.hpp"

namespace heavysum {

/// Analytic value next to its Monte Carlo counterpart.
struct MomentReport {
    std::string name;
    double analytic_value = 0.0;
    double analytic_std_error = 0.0;  // nonzero when the oracle itself is MC-based
    std::map<std::string, double> components;
    double mc_value = 0.0;
    double std_error = 0.0;
    std::int64_t reps = 0;
    double z_score = 0.0;

    bool pass(double bound = 3.0) const { return std::abs(z_score) <= bound; }
};

/// Pair an oracle with an MC estimate; z uses the combined standard error.
MomentReport compare_moment(std::string name, const Estimate& analytic, const Estimate& mc,
                            std::map<std::string, double> components = {});

/// E[R_alpha] = E[sum_t Qtilde_t] / (1 - alpha).
Estimate expected_ratio_max(const ClusterModel& cluster, double alpha);
Estimate expected_ratio_max(const ClusterLaw& law, double alpha);

/// E[sum_t Qtilde_t] from `count` rejection-sampled tilted clusters.
Estimate tilted_sum_mc(const ClusterModel& cluster, std::size_t count, std::uint64_t seed);

/// E[R_{alpha,p}] = Gamma((1-a)/p) / (Gamma(1/p) Gamma(1-a/p))
///                  * E[(||Q||_p^a / E||Q||_p^a) sum_t Q_t / ||Q||_p].
/// For alpha in (1,2) the value is returned with method "experimental".
Estimate expected_ratio_student(const ClusterModel& cluster, double alpha, double p);
Estimate expected_ratio_student(const ClusterLaw& law, double alpha, double p);

/// The p = 2 case through the change of measure Qhat:
/// Gamma((1-a)/2) / (Gamma(1/2) Gamma(1-a/2)) * E[sum_t Qhat_t].
Estimate expected_ratio_student_hat(const ClusterLaw& law, double alpha);

/// Greenwood limit mean Gamma(p-a) / (Gamma(p) Gamma(1-a))
///                   * E[(||Q||_1^a / E||Q||_1^a) ||Q||_p^p / ||Q||_1^p].
Estimate expected_greenwood(const ClusterModel& cluster, double alpha, double p);
Estimate expected_greenwood(const ClusterLaw& law, double alpha, double p);

/// Limit mean of ||X||_4^4 / ||X||_2^4: the Greenwood p = 2 value for the
/// squared sequence, whose cluster is (Q_t^2) with index alpha/2.
Estimate expected_kurtosis_limit(const ClusterModel& cluster, double alpha);
Estimate expected_kurtosis_limit(const ClusterLaw& law, double alpha);

struct GammaIdentityRow {
    double x = 0.0;
    double quadrature = 0.0;
    double closed_form = 0.0;
    double rel_error = 0.0;
};

/// x^{-1/p} against (p / Gamma(1/p)) int_0^inf exp(-lambda^p x) dlambda.
std::vector<GammaIdentityRow> gamma_identity_check(double p, const std::vector<double>& xs);

} // namespace heavysum
