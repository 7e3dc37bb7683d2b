#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>

#include "heavysum/random.hpp"

namespace heavysum {

enum class NoiseKind { pareto, symmetric_stable };

/// Regularly varying innovation law.
///
/// Pareto draws are |Z| = U^{-1/alpha} with sign +1 w.p. q_plus, so that
/// P(|Z| > z) = z^{-alpha} for z >= 1. The stable branch is the standard
/// symmetric alpha-stable law with characteristic function exp(-|u|^alpha).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::pareto;
    double alpha = 0.5;
    double q_plus = 1.0;
    double q_minus = 0.0;

    static NoiseSpec pareto(double alpha, double q_plus = 1.0);
    static NoiseSpec symmetric_stable(double alpha);

    /// Throws ConfigError unless alpha is in (0,1) u (1,2) and q+ + q- = 1.
    void validate() const;

    /// Limit constant C with P(|Z| > x) ~ C x^{-alpha}.
    double tail_constant() const;

    /// E[Z]; requires alpha > 1.
    double mean() const;
};

/// Pareto magnitude quantile: u^{-1/alpha}.
inline double pareto_quantile(double u, double alpha) {
    return std::pow(u, -1.0 / alpha);
}

template <typename Engine>
double draw_noise(const NoiseSpec& spec, Engine& rng) {
    if (spec.kind == NoiseKind::pareto) {
        double z = pareto_quantile(uniform_open(rng), spec.alpha);
        if (spec.q_plus <= 0.0) {
            return -z;
        }
        if (spec.q_plus < 1.0 && uniform_open(rng) >= spec.q_plus) {
            return -z;
        }
        return z;
    }
    // Chambers-Mallows-Stuck, symmetric case.
    constexpr double half_pi = 1.57079632679489661923;
    const double v = half_pi * (2.0 * uniform_open(rng) - 1.0);
    const double w = standard_exponential(rng);
    const double a = spec.alpha;
    return std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
           std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
}

/// iid innovations from stream (seed, 0).
Eigen::VectorXd sample_noise(const NoiseSpec& spec, Eigen::Index count, std::uint64_t seed);

/// Law of (A, B) in X_t = A_t X_{t-1} + B_t.
///
/// The lognormal kind generates the Kesten-Goldie tail: |A| = exp(mu + sigma N)
/// with a declared alpha solving E|A|^alpha = 1. The constant kind (|a| < 1)
/// inherits the tail of B. Non-arithmeticity of log|A| and non-degeneracy
/// P(Ax + B = x) < 1 are not checked; they remain the caller's obligation.
struct SreLaw {
    enum class AKind { lognormal, constant };
    enum class BKind { normal, noise };

    AKind a_kind = AKind::lognormal;
    double a_mu = -0.1875;
    double a_sigma = 0.5;
    double a_negative_prob = 0.0;
    double a_value = 0.0;

    BKind b_kind = BKind::normal;
    double b_location = 0.0;
    double b_scale = 1.0;
    NoiseSpec b_noise{};

    template <typename Engine>
    std::pair<double, double> draw(Engine& rng) const {
        double b = 0.0;
        if (b_kind == BKind::normal) {
            b = b_location + b_scale * standard_normal(rng);
        } else {
            b = b_location + b_scale * draw_noise(b_noise, rng);
        }
        double a = a_value;
        if (a_kind == AKind::lognormal) {
            a = std::exp(a_mu + a_sigma * standard_normal(rng));
            if (a_negative_prob > 0.0 && uniform_open(rng) < a_negative_prob) {
                a = -a;
            }
        }
        return {a, b};
    }

    template <typename Engine>
    double draw_a(Engine& rng) const {
        return draw(rng).first;
    }

    double mean_a() const;
    double mean_b() const;
};

enum class ProcessKind { iid, ar1, sre };

/// Stationary regularly varying process: iid noise, AR(1) or affine SRE.
struct ProcessModel {
    ProcessKind kind = ProcessKind::iid;
    NoiseSpec noise{};
    double phi = 0.0;
    SreLaw sre{};
    double alpha = 0.5;
    int burn_in = 0;

    static ProcessModel iid(const NoiseSpec& noise);
    static ProcessModel ar1(const NoiseSpec& noise, double phi, int burn_in = 1000);

    /// Verifies E|A|^alpha = 1 by Monte Carlo for the lognormal kind.
    static ProcessModel sre_model(const SreLaw& law, double alpha, int burn_in = 10000);

    void validate() const;
    bool is_markov() const { return kind != ProcessKind::iid; }
    std::string name() const;
};

/// A finite sample path X_1..X_n, fully determined by (model, n, seed).
struct Path {
    Eigen::VectorXd values;
    ProcessModel model;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// X_t = phi X_{t-1} + z_t starting from x0 (no burn-in).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
ar1_recursion(typename Derived::Scalar phi, typename Derived::Scalar x0,
              const Eigen::DenseBase<Derived>& noise) {
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> x(noise.size());
    auto prev = x0;
    for (Eigen::Index t = 0; t < noise.size(); ++t) {
        prev = phi * prev + noise(t);
        x(t) = prev;
    }
    return x;
}

/// One step of the model's Markov recursion driven by `rng`.
template <typename Engine>
double step(const ProcessModel& model, double previous, Engine& rng) {
    switch (model.kind) {
    case ProcessKind::iid:
        return draw_noise(model.noise, rng);
    case ProcessKind::ar1:
        return model.phi * previous + draw_noise(model.noise, rng);
    case ProcessKind::sre: {
        auto [a, b] = model.sre.draw(rng);
        return a * previous + b;
    }
    }
    return 0.0;
}

/// Stationary draw of X_0: burn_in recursion steps started at 0.
template <typename Engine>
double stationary_start(const ProcessModel& model, Engine& rng) {
    double x = 0.0;
    for (int i = 0; i < model.burn_in; ++i) {
        x = step(model, x, rng);
    }
    return x;
}

/// Path of length n on a caller-supplied generator.
template <typename Engine>
Eigen::VectorXd simulate(const ProcessModel& model, Eigen::Index n, Engine& rng) {
    Eigen::VectorXd x(n);
    if (model.kind == ProcessKind::iid) {
        for (Eigen::Index t = 0; t < n; ++t) {
            x(t) = draw_noise(model.noise, rng);
        }
        return x;
    }
    double prev = stationary_start(model, rng);
    for (Eigen::Index t = 0; t < n; ++t) {
        prev = step(model, prev, rng);
        x(t) = prev;
    }
    return x;
}

/// Path for replica `stream` of an experiment with `seed`.
Path sample_path(const ProcessModel& model, Eigen::Index n, std::uint64_t seed,
                 std::uint64_t stream = 0);

/// Two paths with independent stationary starts at t = 0 and shared innovations
/// for t >= 1; index t of `values` is time t.
struct CoupledPaths {
    Path path;
    Path coupled;
};

CoupledPaths sample_coupled_paths(const ProcessModel& model, Eigen::Index n, std::uint64_t seed,
                                  std::uint64_t stream = 0);

/// Coupled pair on a caller-supplied generator (values for t = 0..n-1).
template <typename Engine>
std::pair<Eigen::VectorXd, Eigen::VectorXd> simulate_coupled(const ProcessModel& model,
                                                             Eigen::Index n, Engine& rng) {
    Eigen::VectorXd x(n), y(n);
    if (n == 0) {
        return {x, y};
    }
    x(0) = stationary_start(model, rng);
    y(0) = stationary_start(model, rng);
    for (Eigen::Index t = 1; t < n; ++t) {
        if (model.kind == ProcessKind::ar1) {
            const double z = draw_noise(model.noise, rng);
            x(t) = model.phi * x(t - 1) + z;
            y(t) = model.phi * y(t - 1) + z;
        } else {
            auto [a, b] = model.sre.draw(rng);
            x(t) = a * x(t - 1) + b;
            y(t) = a * y(t - 1) + b;
        }
    }
    return {x, y};
}

/// Sequence with n P(|X| > a_n) -> 1.
///
/// Closed form for iid and AR(1); for the SRE, the empirical (1 - 1/n)
/// quantile of |X| on a pre-sample of `presample` points.
double normalizing_an(const ProcessModel& model, double n, Eigen::Index presample = 10'000'000,
                      std::uint64_t seed = 0x5eed);

/// E[X] for alpha > 1.
double stationary_mean(const ProcessModel& model);

/// Throws ModelError if E|A|^q >= 1 at every probed q < alpha.
void check_contractive(const ProcessModel& model);

} // namespace heavysum
