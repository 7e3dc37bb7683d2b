#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace heavysum {

/// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
double ks_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Asymptotic critical value c(level) sqrt((m + n) / (m n)),
/// c(level) = sqrt(-log(level / 2) / 2).
double ks_critical_value(std::int64_t m, std::int64_t n, double level = 0.01);

/// Asymptotic p-value from the Kolmogorov distribution with effective size
/// m n / (m + n).
double ks_pvalue(double distance, std::int64_t m, std::int64_t n);

} // namespace heavysum
