#include "heavysum/diagnostics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "heavysum/errors.hpp"
#include "heavysum/estimate.hpp"
#include "heavysum/parallel.hpp"

namespace heavysum {

void fit_log_slope(DecaySeries& series, int min_index) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < series.index.size(); ++i) {
        const double v = series.values(static_cast<Eigen::Index>(i));
        if (series.index[i] >= min_index && v > 0.0) {
            xs.push_back(series.index[i]);
            ys.push_back(std::log(v));
        }
    }
    series.fitted_points = static_cast<int>(xs.size());
    series.fitted_log_slope = 0.0;
    series.fitted_intercept = 0.0;
    series.r2 = 0.0;
    if (xs.size() < 2) {
        return;
    }
    const auto m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = xs[static_cast<std::size_t>(i)];
        y(i) = ys[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
    series.fitted_intercept = beta(0);
    series.fitted_log_slope = beta(1);
    const Eigen::VectorXd resid = y - design * beta;
    const double ss_tot = (y.array() - y.mean()).square().sum();
    series.r2 = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
}

namespace {

void check_markov(const ProcessModel& model) {
    model.validate();
    if (!model.is_markov()) {
        throw UnsupportedError("coupling diagnostics need a Markov (ar1 or sre) model; iid coupling is trivial");
    }
}

void check_q(const ProcessModel& model, double q) {
    if (!(q > 0.0 && q < std::min(model.alpha, 1.0))) {
        throw ConfigError("coupling exponent q must lie in (0, min(alpha, 1))");
    }
}

void check_grid(std::int64_t n, int r_n, const std::vector<int>& k_grid) {
    if (r_n < 1 || r_n >= n) {
        throw ConfigError("r_n must satisfy 1 <= r_n < n");
    }
    if (k_grid.empty()) {
        throw ConfigError("k_grid must not be empty");
    }
    for (int k : k_grid) {
        if (k < 1 || k > r_n + 1) {
            throw ConfigError("k_grid entries must lie in [1, r_n + 1]");
        }
    }
}

DecaySeries collect(const std::vector<Eigen::VectorXd>& per_rep, const std::vector<int>& index) {
    DecaySeries out;
    out.index = index;
    const auto len = static_cast<Eigen::Index>(index.size());
    out.values = Eigen::VectorXd::Zero(len);
    out.std_errors = Eigen::VectorXd::Zero(len);
    for (Eigen::Index j = 0; j < len; ++j) {
        RunningStats acc;
        for (const auto& r : per_rep) {
            acc.add(r(j));
        }
        out.values(j) = acc.mean();
        out.std_errors(j) = acc.std_error();
    }
    return out;
}

/// Per-replica suffix sums sum_{j=k}^{r_n} terms_j evaluated on k_grid.
Eigen::VectorXd on_grid(const Eigen::VectorXd& terms, const std::vector<int>& k_grid, double scale) {
    const auto r_n = static_cast<int>(terms.size()) - 1;
    Eigen::VectorXd suffix(r_n + 2);
    suffix(r_n + 1) = 0.0;
    for (int j = r_n; j >= 0; --j) {
        suffix(j) = suffix(j + 1) + terms(j);
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(k_grid.size()));
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = scale * suffix(k_grid[i]);
    }
    return out;
}

} // namespace

DecaySeries coupling_decay(const ProcessModel& model, double q, int t_max, std::int64_t reps, std::uint64_t seed,
                           int workers) {
    check_markov(model);
    check_q(model, q);
    if (t_max < 1 || reps < 2) {
        throw ConfigError("coupling_decay needs t_max >= 1 and reps >= 2");
    }
    const auto per_rep = parallel_map<Eigen::VectorXd>(reps, workers, [&](std::int64_t i) {
        Philox rng(seed, static_cast<std::uint64_t>(i));
        const auto [x, y] = simulate_coupled(model, t_max + 1, rng);
        return Eigen::VectorXd((x - y).array().abs().pow(q).matrix());
    });
    std::vector<int> index(static_cast<std::size_t>(t_max + 1));
    for (int t = 0; t <= t_max; ++t) {
        index[static_cast<std::size_t>(t)] = t;
    }
    DecaySeries out = collect(per_rep, index);
    fit_log_slope(out, 1);
    return out;
}

int default_rn(std::int64_t n) {
    return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(n), 0.4))));
}

DecaySeries anticluster_stat(const ProcessModel& model, std::int64_t n, int r_n, const std::vector<int>& k_grid,
                             double x, std::int64_t reps, std::uint64_t seed, double a_n, int workers) {
    model.validate();
    check_grid(n, r_n, k_grid);
    if (!(x > 0.0) || reps < 2) {
        throw ConfigError("anticluster_stat needs x > 0 and reps >= 2");
    }
    const double an = a_n > 0.0 ? a_n : normalizing_an(model, static_cast<double>(n));
    const auto per_rep = parallel_map<Eigen::VectorXd>(reps, workers, [&](std::int64_t i) {
        Philox rng(seed, static_cast<std::uint64_t>(i));
        // Stationarity: average the lag products over every anchor of one length-n path.
        const Eigen::VectorXd path = simulate(model, n, rng);
        const Eigen::ArrayXd trunc = (path.array().abs() / an).min(x);
        const Eigen::Index anchors = n - r_n;
        Eigen::VectorXd terms = Eigen::VectorXd::Zero(r_n + 1);
        for (int j = 1; j <= r_n; ++j) {
            terms(j) = (trunc.head(anchors) * trunc.segment(j, anchors)).sum() / static_cast<double>(anchors);
        }
        return on_grid(terms, k_grid, static_cast<double>(n));
    });
    DecaySeries out = collect(per_rep, k_grid);
    fit_log_slope(out, 1);
    return out;
}

DecaySeries coupled_anticluster_stat(const ProcessModel& model, std::int64_t n, int r_n,
                                     const std::vector<int>& k_grid, double q, std::int64_t reps,
                                     std::uint64_t seed, double a_n, int workers) {
    check_markov(model);
    check_q(model, q);
    check_grid(n, r_n, k_grid);
    if (reps < 2) {
        throw ConfigError("coupled_anticluster_stat needs reps >= 2");
    }
    const double an = a_n > 0.0 ? a_n : normalizing_an(model, static_cast<double>(n));
    const auto per_rep = parallel_map<Eigen::VectorXd>(reps, workers, [&](std::int64_t i) {
        Philox rng(seed, static_cast<std::uint64_t>(i));
        const auto [x, y] = simulate_coupled(model, r_n + 1, rng);
        const Eigen::ArrayXd diff = ((x - y).array().abs() / an).pow(q).min(1.0);
        const double anchor = std::min(1.0, std::pow(std::abs(x(0)) / an, q));
        const Eigen::VectorXd terms = (diff * anchor).matrix();
        return on_grid(terms, k_grid, static_cast<double>(n));
    });
    DecaySeries out = collect(per_rep, k_grid);
    fit_log_slope(out, 1);
    return out;
}

} // namespace heavysum
