#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "heavysum/cluster_models.hpp"
#include "heavysum/estimate.hpp"

namespace heavysum {

using cdouble = std::complex<double>;

/// Poisson arrivals Gamma_1 < Gamma_2 < ... (cumulative unit exponentials).
struct GammaSeries {
    Eigen::VectorXd arrivals;

    template <typename Engine>
    static GammaSeries draw(Engine& rng, Eigen::Index count) {
        GammaSeries g;
        g.arrivals.resize(count);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < count; ++i) {
            acc += standard_exponential(rng);
            g.arrivals(i) = acc;
        }
        return g;
    }

    Eigen::Index count() const { return arrivals.size(); }
};

/// One joint draw (xi, eta, zeta) of the limit, truncated after n_terms.
struct LimitSample {
    double xi = 0.0;
    double eta = 0.0;
    double zeta = 0.0;      // zeta_{alpha,p}
    double zeta_pow = 0.0;  // zeta_{alpha,p}^p
    double alpha = 0.5;
    double p = 2.0;
    // Expected l^1 mass of the discarded xi terms, and of the zeta^p terms.
    double truncation_bound = 0.0;
    double zeta_truncation_bound = 0.0;
};

/// LePage series draw from stream (seed, stream).
///
/// eta = sup_i G_i^{-1/a} max_j |Q_ij|, xi = sum_i G_i^{-1/a} sum_j Q_ij,
/// zeta^p = sum_i G_i^{-p/a} sum_j |Q_ij|^p. Requires alpha < 1, p > alpha,
/// n_terms >= 10.
LimitSample sample_limit_lepage(const ClusterModel& cluster, double alpha, double p, int n_terms,
                                std::uint64_t seed, std::uint64_t stream = 0);

/// `count` independent draws; draw i uses stream i. Results do not depend on
/// the worker count.
std::vector<LimitSample> sample_limit_lepage_batch(const ClusterModel& cluster, double alpha, double p,
                                                   int n_terms, std::int64_t count, std::uint64_t seed,
                                                   int workers = 1);

struct TransformOptions {
    double abs_tol = 1e-10;       // per-atom quadrature tolerance
    std::size_t mc_size = 10'000; // clusters for non-analytic models
    std::uint64_t seed = 0x636c7573ULL;
};

/// A transform value with its Monte Carlo standard error (zero for exact
/// cluster laws) and the quadrature error estimate.
struct TransformValue {
    cdouble value;
    double std_error = 0.0;
    double quad_error = 0.0;
    std::string method;
};

inline constexpr double infinity = std::numeric_limits<double>::infinity();

// Per-atom Levy integrals. All take the real projection z = u * sum_t Q_t.

/// int_0^inf (e^{iyz} - 1 - iyz 1(alpha>1)) alpha y^{-alpha-1} dy, in closed form.
cdouble stable_exponent_atom(double z, double alpha);

/// int_Y^inf e^{iyz} alpha y^{-alpha-1} dy for Y > 0 (contour rotation).
cdouble upper_tail_atom(double z, double y_lower, double alpha, double abs_tol = 1e-12,
                        double* quad_error = nullptr);

/// int_0^U (e^{iyz - lw y^p} - 1 - iyz 1(alpha>1)) alpha y^{-alpha-1} dy with
/// lw = lambda * sum_t |Q_t|^p; U may be infinite when lw > 0.
cdouble levy_integral_atom(double z, double lw, double p, double upper, double alpha, double abs_tol,
                           double* quad_error = nullptr);

/// Exponent of joint_cf_laplace for one cluster atom.
cdouble joint_exponent_atom(double z, double x, double lw, double p, double m, double alpha, double abs_tol,
                            double* quad_error = nullptr);

/// E[exp(i u xi)].
TransformValue stable_cf(double u, const ClusterLaw& law, double alpha);
TransformValue stable_cf(double u, const ClusterModel& cluster, double alpha, const TransformOptions& opt = {});

/// E[exp(i u xi) 1(eta <= x)], computed through the tilted cluster.
TransformValue hybrid_cf(double u, double x, const ClusterLaw& law, double alpha,
                         const TransformOptions& opt = {});
TransformValue hybrid_cf(double u, double x, const ClusterModel& cluster, double alpha,
                         const TransformOptions& opt = {});

/// E[exp(-lambda zeta^p)] = exp(-Gamma(1 - a/p) E||Q||_p^a lambda^{a/p}).
double laplace_zeta(double lambda, const ClusterModel& cluster, double alpha, double p);
double laplace_zeta(double lambda, const ClusterLaw& law, double alpha, double p);

/// log E[exp(i u xi) 1(eta <= x) exp(-lambda zeta^p)] (complex exponent).
TransformValue joint_cf_laplace_exponent(double u, double x, double lambda, const ClusterLaw& law, double alpha,
                                         double p, const TransformOptions& opt = {});

/// E[exp(i u xi) 1(eta <= x) exp(-lambda zeta^p)], evaluated from the cluster
/// process directly (x may be infinity).
TransformValue joint_cf_laplace(double u, double x, double lambda, const ClusterLaw& law, double alpha, double p,
                                const TransformOptions& opt = {});
TransformValue joint_cf_laplace(double u, double x, double lambda, const ClusterModel& cluster, double alpha,
                                double p, const TransformOptions& opt = {});

/// Characteristic function of R = xi / eta.
TransformValue ratio_cf(double u, const ClusterLaw& law, double alpha, const TransformOptions& opt = {});
TransformValue ratio_cf(double u, const ClusterModel& cluster, double alpha, const TransformOptions& opt = {});

/// Laplace transform of (zeta / eta)^p.
TransformValue ratio_norm_laplace(double lambda, const ClusterLaw& law, double alpha, double p,
                                  const TransformOptions& opt = {});

// --- grids -----------------------------------------------------------------

enum class TransformKind { cf, laplace, hybrid, joint };

struct TransformPoint {
    double u = 0.0;
    double x = infinity;
    double lambda = 0.0;
    cdouble value;
    double std_error = 0.0;
    std::string method;
};

struct TransformGrid {
    std::vector<TransformPoint> points;

    /// Cartesian product of the given axes.
    static TransformGrid product(const std::vector<double>& u, const std::vector<double>& x,
                                 const std::vector<double>& lambda);
};

/// Plain Monte Carlo averages of e^{ius}, e^{-lambda s} or e^{ius} 1(m <= x)
/// over samples; `m` is only read for the hybrid kind.
TransformGrid empirical_transform(const Eigen::Ref<const Eigen::VectorXd>& s,
                                  const Eigen::Ref<const Eigen::VectorXd>& m, TransformKind kind,
                                  const TransformGrid& grid);

/// Evaluate the limit transform at every grid point: cf (stable_cf),
/// laplace (laplace_zeta in lambda), hybrid (hybrid_cf) or joint.
TransformGrid limit_transform(const ClusterLaw& law, double alpha, double p, TransformKind kind,
                              const TransformGrid& grid, const TransformOptions& opt = {}, int workers = 1);

} // namespace heavysum
