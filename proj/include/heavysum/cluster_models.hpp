#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "heavysum/estimate.hpp"
#include "heavysum/process_models.hpp"
#include "heavysum/random.hpp"

namespace heavysum {

/// Spectral tail process on the window [t_min, t_max]; zero outside.
struct TailProcessDraw {
    int t_min = 0;
    int t_max = 0;
    Eigen::VectorXd values;
    bool truncated = false;

    double at(int t) const {
        return (t < t_min || t > t_max) ? 0.0 : values(t - t_min);
    }
};

/// Spectral cluster process Q = Theta / ||Theta||_alpha on a finite window.
struct ClusterDraw {
    int t_min = 0;
    Eigen::VectorXd values;
    double alpha = 1.0;
    // l^alpha mass outside the window (exact for analytic models, an
    // edge-mass proxy for empirical blocks).
    double truncation_error = 0.0;

    int t_max() const { return t_min + static_cast<int>(values.size()) - 1; }
    double at(int t) const {
        return (t < t_min || t > t_max()) ? 0.0 : values(t - t_min);
    }
    double sum() const { return values.sum(); }
    double max_abs() const { return values.cwiseAbs().maxCoeff(); }
    /// First index in time order attaining max |Q_t|.
    int argmax_abs() const;
    double pnorm_pow(double p) const { return values.cwiseAbs().array().pow(p).sum(); }
};

/// Q-tilde: a cluster renormalized so that max |Q_t| = 1.
struct TiltedClusterDraw : ClusterDraw {
    std::int64_t proposals = 1;
};

/// Shift-invariant description of one cluster: a finite block optionally
/// continued geometrically (value_k = last * ratio^k) to infinity.
struct ClusterShape {
    Eigen::VectorXd values;
    double tail_ratio = 0.0;

    double sum() const;
    double max_abs() const;
    double pnorm_pow(double p) const;
    ClusterShape scaled(double c) const;
};

/// Law of a cluster as weighted atoms: exact for the analytic kinds, an
/// equally weighted Monte Carlo sample otherwise.
struct ClusterLaw {
    std::vector<double> weights;
    std::vector<ClusterShape> shapes;
    bool exact = true;
    double alpha = 1.0;

    std::size_t size() const { return shapes.size(); }

    /// Weighted mean of f over atoms; std_error is zero for exact laws.
    Estimate expect(const std::function<double(const ClusterShape&)>& f) const;

    /// Law of Q / max|Q| under the max|Q|^alpha change of measure.
    ClusterLaw tilted() const;

    /// Reweight by w(Q) (normalized) and map shapes through g.
    ClusterLaw reweighted(const std::function<double(const ClusterShape&)>& w,
                          const std::function<ClusterShape(const ClusterShape&)>& g) const;
};

enum class ClusterKind { iid, ar1_analytic, empirical };

struct EmpiricalClusterOptions {
    double threshold_quantile = 0.999;
    int half_width = 200;
    Eigen::Index path_length = 2'000'000;
};

/// Cheap summary of one cluster draw.
struct ClusterSummary {
    double sum = 0.0;
    double max_abs = 0.0;
    double pnorm_pow = 0.0;
};

class ClusterModel {
public:
    /// Asymptotically independent case: Theta_t = 0 for t != 0.
    static ClusterModel iid(double alpha, double q_plus = 1.0);

    /// AR(1) tail process Theta_t = Theta_0 phi^t 1(t >= -J).
    static ClusterModel ar1(double phi, double alpha, double q_plus = 1.0);

    /// Blocks around exceedances of a simulated path of `source`,
    /// normalized in l^alpha with the declared alpha.
    static ClusterModel empirical(const ProcessModel& source, const EmpiricalClusterOptions& options,
                                  std::uint64_t seed);

    ClusterKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double phi() const { return phi_; }
    double q_plus() const { return q_plus_; }
    double p_plus() const { return p_plus_; }
    double p_minus() const { return 1.0 - p_plus_; }
    const ProcessModel* source() const { return source_.get(); }
    const std::vector<ClusterDraw>& bank() const;
    double threshold() const { return threshold_; }
    const EmpiricalClusterOptions& options() const { return options_; }

    /// Smallest h with |phi|^{alpha h} / (1 - |phi|^alpha) < 1e-10 (ar1),
    /// 0 for iid, the block half-width for empirical clusters.
    int default_horizon() const;

    std::string name() const;

    template <typename Engine>
    TailProcessDraw draw_tail(Engine& rng, int horizon) const;

    template <typename Engine>
    ClusterDraw draw_cluster(Engine& rng, int horizon) const;

    template <typename Engine>
    ClusterSummary draw_summary(Engine& rng, double p) const;

    /// Exact atoms (iid, ar1) or `mc_size` clusters drawn from stream (seed, 0).
    ClusterLaw law(std::size_t mc_size = 10'000, std::uint64_t seed = 0x636c7573ULL) const;

private:
    template <typename Engine>
    std::pair<double, int> draw_sign_and_lag(Engine& rng) const;

    ClusterKind kind_ = ClusterKind::iid;
    double alpha_ = 1.0;
    double phi_ = 0.0;
    double q_plus_ = 1.0;
    double p_plus_ = 1.0;
    // ar1: |phi|^alpha and the constant max |Q_t| = (1 - |phi|^alpha)^{1/alpha}.
    double ratio_alpha_ = 0.0;
    double qmax_ = 1.0;
    std::shared_ptr<const ProcessModel> source_;
    std::shared_ptr<const std::vector<ClusterDraw>> bank_;
    EmpiricalClusterOptions options_{};
    double threshold_ = 0.0;
};

TailProcessDraw sample_spectral_tail(const ClusterModel& model, int horizon, std::uint64_t seed,
                                     std::uint64_t stream = 0);

ClusterDraw sample_cluster(const ClusterModel& model, int horizon, std::uint64_t seed,
                           std::uint64_t stream = 0);

/// Rejection sampler: accept Q with probability max|Q|^alpha, return Q/max|Q|.
TiltedClusterDraw sample_tilted_cluster(const ClusterModel& model, int horizon, std::uint64_t seed,
                                        std::uint64_t stream = 0);

/// `count` accepted tilted clusters from one stream plus the acceptance rate.
struct TiltedBatch {
    std::vector<TiltedClusterDraw> draws;
    std::int64_t proposals = 0;
    Estimate acceptance;
};

TiltedBatch sample_tilted_clusters(const ClusterModel& model, int horizon, std::size_t count,
                                   std::uint64_t seed);

/// Acceptance rate of the tilted sampler over a fixed number of proposals.
Estimate tilted_acceptance_rate(const ClusterModel& model, std::int64_t proposals, std::uint64_t seed);

/// theta = E[max_t |Q_t|^alpha].
///
/// Closed form for iid and AR(1); for empirical clusters with an SRE source,
/// E[(1 - sup_{t>=1} |A_1...A_t|^alpha)_+] by Monte Carlo; otherwise the bank
/// mean of max |Q_t|^alpha.
Estimate extremal_index(const ClusterModel& model, std::int64_t reps = 100'000,
                        std::uint64_t seed = 0x74686574ULL);

/// E[(1 - sup_{t>=1} |A_1...A_t|^alpha)_+] for an SRE process model.
Estimate sre_extremal_index(const ProcessModel& model, std::int64_t reps, std::uint64_t seed,
                            int max_steps = 10'000);

/// Mean of max|Q|^alpha over `reps` sampled clusters.
Estimate extremal_index_from_clusters(const ClusterModel& model, std::int64_t reps, std::uint64_t seed);

/// E[||Q||_p^alpha]; equals 1 at p = alpha.
Estimate cluster_moment(const ClusterModel& model, double p);

/// Bounded test functional of a window (Theta_{-h}, ..., Theta_h).
struct WindowFunctional {
    std::string name;
    std::function<double(const Eigen::VectorXd&)> f;
    double bound = 1.0;
};

struct TimeChangeRow {
    std::string functional;
    Estimate conditional;  // E[f(Theta_{-h..h}) | Theta_{-t} != 0]
    Estimate tilted;       // E[|Theta_t|^a / E|Theta_t|^a f(Theta_{t-h..t+h} / |Theta_t|)]
    double z = 0.0;
};

struct TimeChangeReport {
    int t = 0;
    int h = 0;
    std::int64_t reps = 0;
    bool vacuous = false;
    std::vector<TimeChangeRow> rows;
};

/// Monte Carlo comparison of both sides of the time-change formula.
TimeChangeReport verify_time_change(const ClusterModel& model, int t,
                                    const std::vector<WindowFunctional>& functionals, std::int64_t reps,
                                    std::uint64_t seed, int h = 2);

/// Partial sums sum_{j=0}^{k} E[|Theta_j| ^ 1] for k = 0..k_max.
Eigen::VectorXd tail_summability_profile(const ClusterModel& model, int k_max, std::int64_t reps = 0,
                                         std::uint64_t seed = 0x73756d6dULL);

/// Smallest k beyond which increments of the summability profile stay below tol.
int tail_summability_cutoff(const ClusterModel& model, double tol = 1e-6);

/// Classical blocks estimator: (#blocks with an exceedance) / (#exceedances).
Estimate blocks_extremal_index(const Eigen::Ref<const Eigen::VectorXd>& path, double threshold,
                               Eigen::Index block_length);

// ---------------------------------------------------------------------------

template <typename Engine>
std::pair<double, int> ClusterModel::draw_sign_and_lag(Engine& rng) const {
    const double sign = uniform_open(rng) < p_plus_ ? 1.0 : -1.0;
    if (kind_ != ClusterKind::ar1_analytic) {
        return {sign, 0};
    }
    // P(J = j) = r^j (1 - r) with r = |phi|^alpha.
    const double u = uniform_open(rng);
    const int lag = static_cast<int>(std::floor(std::log(u) / std::log(ratio_alpha_)));
    return {sign, lag};
}

template <typename Engine>
TailProcessDraw ClusterModel::draw_tail(Engine& rng, int horizon) const {
    TailProcessDraw out;
    if (kind_ == ClusterKind::empirical) {
        const auto& b = bank();
        const auto& q = b[static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(b.size()))];
        const double anchor = std::abs(q.at(0));
        const int lo = std::max(q.t_min, -horizon);
        const int hi = std::min(q.t_max(), horizon);
        out.t_min = lo;
        out.t_max = hi;
        out.values = q.values.segment(lo - q.t_min, hi - lo + 1) / anchor;
        out.truncated = q.t_min < -horizon || q.t_max() > horizon;
        return out;
    }
    auto [sign, lag] = draw_sign_and_lag(rng);
    if (kind_ == ClusterKind::iid) {
        out.t_min = out.t_max = 0;
        out.values = Eigen::VectorXd::Constant(1, sign);
        return out;
    }
    const int back = std::min(lag, horizon);
    out.truncated = lag > horizon;
    out.t_min = -back;
    out.t_max = horizon;
    out.values.resize(back + horizon + 1);
    for (int t = -back; t <= horizon; ++t) {
        out.values(t + back) = sign * std::pow(phi_, t);
    }
    return out;
}

template <typename Engine>
ClusterDraw ClusterModel::draw_cluster(Engine& rng, int horizon) const {
    ClusterDraw out;
    out.alpha = alpha_;
    if (kind_ == ClusterKind::empirical) {
        const auto& b = bank();
        return b[static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(b.size()))];
    }
    auto [sign, lag] = draw_sign_and_lag(rng);
    if (kind_ == ClusterKind::iid) {
        out.t_min = 0;
        out.values = Eigen::VectorXd::Constant(1, sign);
        return out;
    }
    // ||Theta||_alpha^alpha = r^{-J} / (1 - r), so Q_t = Theta_0 phi^t |phi|^J (1-r)^{1/alpha}.
    const double aphi = std::abs(phi_);
    out.t_min = -lag;
    out.values.resize(lag + horizon + 1);
    for (int t = -lag; t <= horizon; ++t) {
        // sign(phi)^t |phi|^{t+J}, computed without forming |phi|^{-J}.
        const double mag = std::pow(aphi, t + lag);
        const double sgn = (phi_ < 0.0 && (t % 2 != 0)) ? -1.0 : 1.0;
        out.values(t + lag) = sign * sgn * mag * qmax_;
    }
    out.truncation_error = std::pow(ratio_alpha_, horizon + 1 + lag);
    return out;
}

template <typename Engine>
ClusterSummary ClusterModel::draw_summary(Engine& rng, double p) const {
    if (kind_ == ClusterKind::empirical) {
        const auto& b = bank();
        const auto& q = b[static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(b.size()))];
        return {q.sum(), q.max_abs(), q.pnorm_pow(p)};
    }
    auto [sign, lag] = draw_sign_and_lag(rng);
    if (kind_ == ClusterKind::iid) {
        return {sign, 1.0, 1.0};
    }
    // Sum, max and l^p norm do not depend on J beyond the parity sign.
    const double s = (phi_ < 0.0 && (lag % 2 != 0)) ? -sign : sign;
    return {s * qmax_ / (1.0 - phi_), qmax_,
            std::pow(qmax_, p) / (1.0 - std::pow(std::abs(phi_), p))};
}

} // namespace heavysum
