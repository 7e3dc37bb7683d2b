#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "heavysum/process_models.hpp"

namespace heavysum {

/// Nonnegative series indexed by lag or cutoff, with a least-squares fit of
/// log(value) against index over the strictly positive entries.
struct DecaySeries {
    std::vector<int> index;
    Eigen::VectorXd values;
    Eigen::VectorXd std_errors;
    double fitted_log_slope = 0.0;
    double fitted_intercept = 0.0;
    double r2 = 0.0;
    int fitted_points = 0;
};

/// Least-squares line through (index, log value) for positive values with
/// index >= min_index. Leaves the fit at zero when fewer than two points qualify.
void fit_log_slope(DecaySeries& series, int min_index = 1);

/// E|X_t - X*_t|^q for t = 0..t_max over coupled pairs (replica i uses stream i).
/// Requires a Markov model and 0 < q < min(alpha, 1); the fit uses t >= 1.
DecaySeries coupling_decay(const ProcessModel& model, double q, int t_max, std::int64_t reps,
                           std::uint64_t seed, int workers = 1);

/// Default block size floor(n^0.4).
int default_rn(std::int64_t n);

/// n sum_{j=k}^{r_n} E[(|X_j / a_n| ^ x)(|X_0 / a_n| ^ x)] for k in k_grid
/// (^ is the minimum). Pass a_n <= 0 to use normalizing_an(model, n).
/// Each replica is one length-n path averaged over its n - r_n anchors
/// (stationarity). Non-increasing in k by construction: every cutoff reuses
/// the same draws.
DecaySeries anticluster_stat(const ProcessModel& model, std::int64_t n, int r_n, const std::vector<int>& k_grid,
                             double x, std::int64_t reps, std::uint64_t seed, double a_n = 0.0,
                             int workers = 1);

/// n sum_{t=k}^{r_n} E[(|(X_t - X*_t) / a_n|^q ^ 1)(|X_0 / a_n|^q ^ 1)] for k in k_grid.
DecaySeries coupled_anticluster_stat(const ProcessModel& model, std::int64_t n, int r_n,
                                     const std::vector<int>& k_grid, double q, std::int64_t reps,
                                     std::uint64_t seed, double a_n = 0.0, int workers = 1);

} // namespace heavysum
