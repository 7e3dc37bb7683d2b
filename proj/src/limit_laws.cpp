#include "heavysum/limit_laws.hpp"

#include <algorithm>
#include <cmath>

#include "heavysum/errors.hpp"
#include "heavysum/parallel.hpp"
#include "heavysum/quadrature.hpp"

namespace heavysum {

namespace {

constexpr double pi = 3.14159265358979323846;
// Below this product scale the integrand is replaced by its Taylor series.
constexpr double series_scale = 1e-4;
// e^{-40} is far below any tolerance we use.
constexpr double damping_cut = 40.0;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0) || alpha == 1.0) {
        throw ConfigError("limit transforms need alpha in (0,1) or (1,2)");
    }
}

void check_model_alpha(const ClusterModel& cluster, double alpha) {
    check_alpha(alpha);
    if (std::abs(cluster.alpha() - alpha) > 1e-12) {
        throw ConfigError("alpha does not match the cluster model's tail index");
    }
}

/// e^{a + ib} - 1 - i b c without cancellation for small a, b.
cdouble expm1_compensated(double a, double b, bool compensate) {
    const double em1 = std::expm1(a);
    const double sb = std::sin(b);
    const double half = std::sin(0.5 * b);
    const double re = em1 * std::cos(b) - 2.0 * half * half;
    double sin_minus;
    if (compensate) {
        if (std::abs(b) < 1e-3) {
            const double b2 = b * b;
            sin_minus = -b * b2 / 6.0 * (1.0 - b2 / 20.0 * (1.0 - b2 / 42.0));
        } else {
            sin_minus = sb - b;
        }
    } else {
        sin_minus = sb;
    }
    return {re, em1 * sb + sin_minus};
}

/// Integral over [0, y0] of the Taylor expansion of e^{iyz - lw y^p} - 1 - iyzc
/// against alpha y^{-alpha-1}, through third order in (yz, lw y^p).
cdouble series_piece(double z, double lw, double p, double y0, double alpha, bool compensate) {
    if (y0 <= 0.0) {
        return {0.0, 0.0};
    }
    auto mom = [&](double k) { return alpha * std::pow(y0, k - alpha) / (k - alpha); };
    cdouble out{0.0, 0.0};
    if (!compensate) {
        out += cdouble(0.0, z * mom(1.0));
    }
    out += -z * z / 2.0 * mom(2.0);
    out += cdouble(0.0, -z * z * z / 6.0 * mom(3.0));
    if (lw > 0.0) {
        out += -lw * mom(p);
        out += cdouble(0.0, -z * lw * mom(p + 1.0));
        out += lw * lw / 2.0 * mom(2.0 * p);
    }
    return out;
}

struct AtomMean {
    cdouble mean;
    double std_error = 0.0;
    double quad_error = 0.0;
};

/// Weighted mean of a complex per-atom functional with its MC standard error.
template <typename F>
AtomMean atom_mean(const ClusterLaw& law, F&& f) {
    AtomMean out;
    const std::size_t n = law.size();
    std::vector<cdouble> vals(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double qe = 0.0;
        vals[i] = f(law.shapes[i], &qe);
        out.mean += law.weights[i] * vals[i];
        out.quad_error += law.weights[i] * qe;
        wsum += law.weights[i];
    }
    out.mean /= wsum;
    out.quad_error /= wsum;
    if (!law.exact && n > 1) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = law.weights[i] / wsum;
            acc += w * w * std::norm(vals[i] - out.mean);
        }
        out.std_error = std::sqrt(acc * static_cast<double>(n) / static_cast<double>(n - 1));
    }
    return out;
}

TransformValue from_exponent(const AtomMean& e, const ClusterLaw& law) {
    TransformValue v;
    v.value = std::exp(e.mean);
    // Delta method: d exp(E) = exp(E) dE.
    v.std_error = std::abs(v.value) * e.std_error;
    v.quad_error = std::abs(v.value) * e.quad_error;
    v.method = law.exact ? "quadrature" : "quadrature+monte_carlo";
    return v;
}

} // namespace

// --- per-atom integrals --------------------------------------------------------

cdouble stable_exponent_atom(double z, double alpha) {
    if (z == 0.0) {
        return {0.0, 0.0};
    }
    const double scale = -std::tgamma(1.0 - alpha) * std::pow(std::abs(z), alpha);
    const double s = z > 0.0 ? 1.0 : -1.0;
    return scale * cdouble(std::cos(pi * alpha / 2.0), -s * std::sin(pi * alpha / 2.0));
}

cdouble upper_tail_atom(double z, double y_lower, double alpha, double abs_tol, double* quad_error) {
    if (!(y_lower > 0.0)) {
        throw ConfigError("upper_tail_atom needs a positive lower limit");
    }
    if (quad_error) {
        *quad_error = 0.0;
    }
    if (z == 0.0) {
        return {std::pow(y_lower, -alpha), 0.0};
    }
    if (std::isinf(y_lower)) {
        return {0.0, 0.0};
    }
    const double az = std::abs(z);
    cdouble r;
    if (y_lower * az <= 1.0) {
        // Few oscillations below y_lower: complement of the full integral.
        const bool comp = alpha > 1.0;
        double qe = 0.0;
        r = std::pow(y_lower, -alpha) + stable_exponent_atom(az, alpha) -
            levy_integral_atom(az, 0.0, 1.0, y_lower, alpha, abs_tol, &qe);
        if (comp) {
            r += cdouble(0.0, az * alpha * std::pow(y_lower, 1.0 - alpha) / (alpha - 1.0));
        }
        if (quad_error) {
            *quad_error = qe;
        }
    } else {
        // Rotate the contour: y = Y + i v / z, v in [0, inf).
        const double Y = y_lower;
        auto g = [&](double v) { return std::exp(-v) * std::pow(cdouble(Y, v / az), -alpha - 1.0); };
        QuadOptions opt;
        opt.abs_tol = abs_tol * az / alpha;
        const auto res = integrate_to_infinity(g, 0.0, opt);
        r = cdouble(0.0, alpha / az) * std::exp(cdouble(0.0, Y * az)) * res.value;
        if (quad_error) {
            *quad_error = res.abs_error * alpha / az;
        }
    }
    return z > 0.0 ? r : std::conj(r);
}

cdouble levy_integral_atom(double z, double lw, double p, double upper, double alpha, double abs_tol,
                           double* quad_error) {
    const bool comp = alpha > 1.0;
    if (quad_error) {
        *quad_error = 0.0;
    }
    if (!(upper > 0.0)) {
        return {0.0, 0.0};
    }
    if (std::isinf(upper) && !(lw > 0.0)) {
        throw ConfigError("levy_integral_atom: infinite range needs lambda * ||Q||_p^p > 0");
    }
    // Beyond y_d the damping factor is below e^{-40}; integrate (-1 - iyzc) exactly there.
    double hi = upper;
    cdouble remainder{0.0, 0.0};
    if (lw > 0.0) {
        const double y_d = std::pow(damping_cut / lw, 1.0 / p);
        if (y_d < upper) {
            hi = y_d;
            const double up_neg = std::isinf(upper) ? 0.0 : std::pow(upper, -alpha);
            remainder += up_neg - std::pow(hi, -alpha);
            if (comp) {
                const double up_pos = std::isinf(upper) ? 0.0 : std::pow(upper, 1.0 - alpha);
                remainder += cdouble(0.0, -z * alpha * (up_pos - std::pow(hi, 1.0 - alpha)) / (1.0 - alpha));
            }
        }
    }
    double y0 = hi;
    if (z != 0.0) {
        y0 = std::min(y0, series_scale / std::abs(z));
    }
    if (lw > 0.0) {
        y0 = std::min(y0, std::pow(series_scale / lw, 1.0 / p));
    }
    cdouble total = series_piece(z, lw, p, y0, alpha, comp) + remainder;
    if (y0 < hi) {
        auto f = [&](double s) {
            const double y = std::exp(s);
            const double a = lw > 0.0 ? -lw * std::pow(y, p) : 0.0;
            return expm1_compensated(a, y * z, comp) * (alpha * std::exp(-alpha * s));
        };
        QuadOptions opt;
        opt.abs_tol = abs_tol;
        const auto res = integrate(f, std::log(y0), std::log(hi), opt);
        total += res.value;
        if (quad_error) {
            *quad_error = res.abs_error;
        }
    }
    return total;
}

cdouble joint_exponent_atom(double z, double x, double lw, double p, double m, double alpha, double abs_tol,
                            double* quad_error) {
    if (quad_error) {
        *quad_error = 0.0;
    }
    const double cut = std::isinf(x) ? infinity : x / m;
    if (!(lw > 0.0)) {
        cdouble out = stable_exponent_atom(z, alpha);
        if (!std::isinf(cut)) {
            out -= upper_tail_atom(z, cut, alpha, abs_tol, quad_error);
        }
        return out;
    }
    cdouble out = levy_integral_atom(z, lw, p, cut, alpha, abs_tol, quad_error);
    if (!std::isinf(cut)) {
        out -= std::pow(cut, -alpha);
        if (alpha > 1.0) {
            out += cdouble(0.0, -z * alpha * std::pow(cut, 1.0 - alpha) / (alpha - 1.0));
        }
    }
    return out;
}

// --- transforms ----------------------------------------------------------------

TransformValue stable_cf(double u, const ClusterLaw& law, double alpha) {
    check_alpha(alpha);
    const auto e = atom_mean(law, [&](const ClusterShape& q, double*) {
        return stable_exponent_atom(u * q.sum(), alpha);
    });
    TransformValue v = from_exponent(e, law);
    v.method = law.exact ? "closed_form" : "monte_carlo";
    return v;
}

TransformValue stable_cf(double u, const ClusterModel& cluster, double alpha, const TransformOptions& opt) {
    check_model_alpha(cluster, alpha);
    return stable_cf(u, cluster.law(opt.mc_size, opt.seed), alpha);
}

TransformValue hybrid_cf(double u, double x, const ClusterLaw& law, double alpha, const TransformOptions& opt) {
    check_alpha(alpha);
    if (!(x > 0.0)) {
        throw ConfigError("hybrid_cf needs x > 0");
    }
    const auto stable = atom_mean(law, [&](const ClusterShape& q, double*) {
        return stable_exponent_atom(u * q.sum(), alpha);
    });
    if (std::isinf(x)) {
        return from_exponent(stable, law);
    }
    const double theta = law.expect([&](const ClusterShape& q) { return std::pow(q.max_abs(), alpha); }).estimate;
    const ClusterLaw tilted = law.tilted();
    const auto tail = atom_mean(tilted, [&](const ClusterShape& q, double* qe) {
        return upper_tail_atom(u * q.sum(), x, alpha, opt.abs_tol, qe);
    });
    AtomMean e;
    e.mean = stable.mean - theta * tail.mean;
    e.std_error = std::hypot(stable.std_error, theta * tail.std_error);
    e.quad_error = theta * tail.quad_error;
    return from_exponent(e, law);
}

TransformValue hybrid_cf(double u, double x, const ClusterModel& cluster, double alpha,
                         const TransformOptions& opt) {
    check_model_alpha(cluster, alpha);
    return hybrid_cf(u, x, cluster.law(opt.mc_size, opt.seed), alpha, opt);
}

double laplace_zeta(double lambda, const ClusterLaw& law, double alpha, double p) {
    check_alpha(alpha);
    if (!(p > alpha) || lambda < 0.0) {
        throw ConfigError("laplace_zeta needs p > alpha and lambda >= 0");
    }
    const double moment =
        law.expect([&](const ClusterShape& q) { return std::pow(q.pnorm_pow(p), alpha / p); }).estimate;
    return std::exp(-std::tgamma(1.0 - alpha / p) * moment * std::pow(lambda, alpha / p));
}

double laplace_zeta(double lambda, const ClusterModel& cluster, double alpha, double p) {
    check_model_alpha(cluster, alpha);
    if (!(p > alpha) || lambda < 0.0) {
        throw ConfigError("laplace_zeta needs p > alpha and lambda >= 0");
    }
    const double moment = cluster_moment(cluster, p).estimate;
    return std::exp(-std::tgamma(1.0 - alpha / p) * moment * std::pow(lambda, alpha / p));
}

TransformValue joint_cf_laplace_exponent(double u, double x, double lambda, const ClusterLaw& law, double alpha,
                                         double p, const TransformOptions& opt) {
    check_alpha(alpha);
    if (!(p > alpha) || lambda < 0.0 || !(x > 0.0)) {
        throw ConfigError("joint_cf_laplace needs p > alpha, lambda >= 0 and x > 0");
    }
    if (std::isinf(x) && lambda == 0.0) {
        const auto e = atom_mean(law, [&](const ClusterShape& q, double*) {
            return stable_exponent_atom(u * q.sum(), alpha);
        });
        return TransformValue{e.mean, e.std_error, e.quad_error, "closed_form"};
    }
    const auto e = atom_mean(law, [&](const ClusterShape& q, double* qe) {
        return joint_exponent_atom(u * q.sum(), x, lambda * q.pnorm_pow(p), p, q.max_abs(), alpha, opt.abs_tol,
                                   qe);
    });
    return TransformValue{e.mean, e.std_error, e.quad_error, law.exact ? "quadrature" : "quadrature+monte_carlo"};
}

TransformValue joint_cf_laplace(double u, double x, double lambda, const ClusterLaw& law, double alpha, double p,
                                const TransformOptions& opt) {
    const TransformValue e = joint_cf_laplace_exponent(u, x, lambda, law, alpha, p, opt);
    TransformValue v;
    v.value = std::exp(e.value);
    v.std_error = std::abs(v.value) * e.std_error;
    v.quad_error = std::abs(v.value) * e.quad_error;
    v.method = e.method;
    return v;
}

TransformValue joint_cf_laplace(double u, double x, double lambda, const ClusterModel& cluster, double alpha,
                                double p, const TransformOptions& opt) {
    check_model_alpha(cluster, alpha);
    return joint_cf_laplace(u, x, lambda, cluster.law(opt.mc_size, opt.seed), alpha, p, opt);
}

TransformValue ratio_cf(double u, const ClusterLaw& law, double alpha, const TransformOptions& opt) {
    check_alpha(alpha);
    const ClusterLaw tilted = law.tilted();
    const Estimate mean_sum = tilted.expect([](const ClusterShape& q) { return q.sum(); });
    const Estimate sq = tilted.expect([](const ClusterShape& q) { return q.sum() * q.sum(); });
    if (std::abs(mean_sum.estimate) < 1e-12 && sq.estimate - mean_sum.estimate * mean_sum.estimate < 1e-12 &&
        sq.estimate < 1e-12) {
        throw DegenerateError("sum of the tilted cluster is a.s. zero: the ratio limit is degenerate");
    }
    const auto num = atom_mean(tilted, [&](const ClusterShape& q, double*) {
        return std::exp(cdouble(0.0, u * q.sum()));
    });
    const auto den = atom_mean(tilted, [&](const ClusterShape& q, double* qe) {
        return 1.0 - levy_integral_atom(u * q.sum(), 0.0, 1.0, 1.0, alpha, opt.abs_tol, qe);
    });
    TransformValue v;
    v.value = num.mean / den.mean;
    v.std_error = std::abs(v.value) * std::hypot(num.std_error / std::abs(num.mean), den.std_error / std::abs(den.mean));
    v.quad_error = std::abs(v.value) * den.quad_error / std::abs(den.mean);
    v.method = law.exact ? "quadrature" : "quadrature+monte_carlo";
    return v;
}

TransformValue ratio_cf(double u, const ClusterModel& cluster, double alpha, const TransformOptions& opt) {
    check_model_alpha(cluster, alpha);
    return ratio_cf(u, cluster.law(opt.mc_size, opt.seed), alpha, opt);
}

TransformValue ratio_norm_laplace(double lambda, const ClusterLaw& law, double alpha, double p,
                                  const TransformOptions& opt) {
    check_alpha(alpha);
    if (!(p > alpha) || !(lambda >= 0.0)) {
        throw ConfigError("ratio_norm_laplace needs p > alpha and lambda >= 0");
    }
    if (lambda == 0.0) {
        return TransformValue{cdouble(1.0, 0.0), 0.0, 0.0, "closed_form"};
    }
    const ClusterLaw tilted = law.tilted();
    const auto num = atom_mean(tilted, [&](const ClusterShape& q, double*) {
        return cdouble(std::exp(-lambda * q.pnorm_pow(p)), 0.0);
    });
    const auto den = atom_mean(tilted, [&](const ClusterShape& q, double* qe) {
        return 1.0 - levy_integral_atom(0.0, lambda * q.pnorm_pow(p), p, 1.0, alpha, opt.abs_tol, qe);
    });
    TransformValue v;
    v.value = num.mean / den.mean;
    v.std_error = std::abs(v.value) * std::hypot(num.std_error / std::abs(num.mean), den.std_error / std::abs(den.mean));
    v.quad_error = std::abs(v.value) * den.quad_error / std::abs(den.mean);
    v.method = law.exact ? "quadrature" : "quadrature+monte_carlo";
    return v;
}

// --- LePage sampling -----------------------------------------------------------

namespace {

struct SeriesMoments {
    double l1 = 1.0;      // E sum_t |Q_t|
    double lp_pow = 1.0;  // E sum_t |Q_t|^p
};

SeriesMoments series_moments(const ClusterModel& cluster, double p) {
    SeriesMoments m;
    switch (cluster.kind()) {
    case ClusterKind::iid:
        break;
    case ClusterKind::ar1_analytic: {
        const double a = std::abs(cluster.phi());
        const double qmax = std::pow(1.0 - std::pow(a, cluster.alpha()), 1.0 / cluster.alpha());
        m.l1 = qmax / (1.0 - a);
        m.lp_pow = std::pow(qmax, p) / (1.0 - std::pow(a, p));
        break;
    }
    case ClusterKind::empirical: {
        RunningStats l1, lp;
        for (const auto& q : cluster.bank()) {
            l1.add(q.values.cwiseAbs().sum());
            lp.add(q.pnorm_pow(p));
        }
        m.l1 = l1.mean();
        m.lp_pow = lp.mean();
        break;
    }
    }
    return m;
}

void check_lepage(const ClusterModel& cluster, double alpha, double p, int n_terms) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw UnsupportedError("the LePage representation is only available for alpha < 1");
    }
    check_model_alpha(cluster, alpha);
    if (!(p > alpha)) {
        throw ConfigError("LePage zeta component needs p > alpha");
    }
    if (n_terms < 10) {
        throw ConfigError("LePage series needs n_terms >= 10");
    }
}

LimitSample lepage_draw(const ClusterModel& cluster, double alpha, double p, int n_terms, std::uint64_t seed,
                        std::uint64_t stream, const SeriesMoments& mom) {
    Philox rng(seed, stream);
    LimitSample s;
    s.alpha = alpha;
    s.p = p;
    double gamma = 0.0;
    const double inv_alpha = 1.0 / alpha;
    const double p_over_alpha = p / alpha;
    for (int i = 0; i < n_terms; ++i) {
        gamma += standard_exponential(rng);
        const double lg = std::log(gamma);
        const double c = std::exp(-inv_alpha * lg);
        const double cp = std::exp(-p_over_alpha * lg);
        const ClusterSummary q = cluster.draw_summary(rng, p);
        s.xi += c * q.sum;
        s.eta = std::max(s.eta, c * q.max_abs);
        s.zeta_pow += cp * q.pnorm_pow;
    }
    s.zeta = std::pow(s.zeta_pow, 1.0 / p);
    s.truncation_bound = mom.l1 * std::pow(gamma, 1.0 - inv_alpha) / (inv_alpha - 1.0);
    s.zeta_truncation_bound = mom.lp_pow * std::pow(gamma, 1.0 - p_over_alpha) / (p_over_alpha - 1.0);
    return s;
}

} // namespace

LimitSample sample_limit_lepage(const ClusterModel& cluster, double alpha, double p, int n_terms,
                                std::uint64_t seed, std::uint64_t stream) {
    check_lepage(cluster, alpha, p, n_terms);
    return lepage_draw(cluster, alpha, p, n_terms, seed, stream, series_moments(cluster, p));
}

std::vector<LimitSample> sample_limit_lepage_batch(const ClusterModel& cluster, double alpha, double p,
                                                   int n_terms, std::int64_t count, std::uint64_t seed,
                                                   int workers) {
    check_lepage(cluster, alpha, p, n_terms);
    if (count < 1) {
        throw ConfigError("LePage batch needs count >= 1");
    }
    const SeriesMoments mom = series_moments(cluster, p);
    return parallel_map<LimitSample>(count, workers, [&](std::int64_t i) {
        return lepage_draw(cluster, alpha, p, n_terms, seed, static_cast<std::uint64_t>(i), mom);
    });
}

// --- grids ---------------------------------------------------------------------

TransformGrid TransformGrid::product(const std::vector<double>& u, const std::vector<double>& x,
                                     const std::vector<double>& lambda) {
    TransformGrid g;
    const std::vector<double> one_u = u.empty() ? std::vector<double>{0.0} : u;
    const std::vector<double> one_x = x.empty() ? std::vector<double>{infinity} : x;
    const std::vector<double> one_l = lambda.empty() ? std::vector<double>{0.0} : lambda;
    for (double uu : one_u) {
        for (double xx : one_x) {
            for (double ll : one_l) {
                TransformPoint pt;
                pt.u = uu;
                pt.x = xx;
                pt.lambda = ll;
                g.points.push_back(pt);
            }
        }
    }
    return g;
}

TransformGrid empirical_transform(const Eigen::Ref<const Eigen::VectorXd>& s,
                                  const Eigen::Ref<const Eigen::VectorXd>& m, TransformKind kind,
                                  const TransformGrid& grid) {
    if (s.size() == 0) {
        throw ConfigError("empirical_transform needs samples");
    }
    if (s.size() < 100) {
        throw ConfigError("empirical_transform needs at least 100 samples");
    }
    if ((kind == TransformKind::hybrid || kind == TransformKind::joint) && m.size() != s.size()) {
        throw ConfigError("hybrid transform needs one maximum per sample");
    }
    if (kind == TransformKind::joint) {
        throw UnsupportedError("empirical joint transforms need three components; use the hybrid kind");
    }
    TransformGrid out = grid;
    const double n = static_cast<double>(s.size());
    for (auto& pt : out.points) {
        cdouble sum{0.0, 0.0};
        double sum_sq = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            cdouble v;
            switch (kind) {
            case TransformKind::cf:
                v = std::exp(cdouble(0.0, pt.u * s(i)));
                break;
            case TransformKind::laplace:
                v = pt.lambda == 0.0 ? cdouble(1.0, 0.0) : cdouble(std::exp(-pt.lambda * s(i)), 0.0);
                break;
            case TransformKind::hybrid:
            case TransformKind::joint:
                v = m(i) <= pt.x ? std::exp(cdouble(0.0, pt.u * s(i))) : cdouble(0.0, 0.0);
                break;
            }
            sum += v;
            sum_sq += std::norm(v);
        }
        pt.value = sum / n;
        const double var = std::max(0.0, (sum_sq / n - std::norm(pt.value)) * n / (n - 1.0));
        pt.std_error = std::sqrt(var / n);
        pt.method = "monte_carlo";
    }
    return out;
}

TransformGrid limit_transform(const ClusterLaw& law, double alpha, double p, TransformKind kind,
                              const TransformGrid& grid, const TransformOptions& opt, int workers) {
    TransformGrid out = grid;
    parallel_for(static_cast<std::int64_t>(out.points.size()), workers, [&](std::int64_t i) {
        auto& pt = out.points[static_cast<std::size_t>(i)];
        TransformValue v;
        switch (kind) {
        case TransformKind::cf:
            v = stable_cf(pt.u, law, alpha);
            break;
        case TransformKind::laplace:
            v.value = laplace_zeta(pt.lambda, law, alpha, p);
            v.method = law.exact ? "closed_form" : "monte_carlo";
            break;
        case TransformKind::hybrid:
            v = hybrid_cf(pt.u, pt.x, law, alpha, opt);
            break;
        case TransformKind::joint:
            v = joint_cf_laplace(pt.u, pt.x, pt.lambda, law, alpha, p, opt);
            break;
        }
        pt.value = v.value;
        pt.std_error = v.std_error;
        pt.method = v.method;
    });
    return out;
}

} // namespace heavysum
