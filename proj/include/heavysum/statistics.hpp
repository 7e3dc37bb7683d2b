#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "heavysum/errors.hpp"
#include "heavysum/process_models.hpp"

namespace heavysum {

enum class Centering { none, analytic, empirical };

/// (S_n, M_n, gamma_{n,p}) for one path.
///
/// Moduli are stored in max-rescaled form: scaled_pow[p] = sum (|x_t|/M_n)^p,
/// so gamma_{n,p} = M_n * scaled_pow[p]^{1/p} never overflows.
struct PathStats {
    double sum = 0.0;
    double max_abs = 0.0;
    std::map<double, double> scaled_pow;
    Eigen::Index n = 0;
    Centering centering = Centering::none;
    double center = 0.0;

    bool degenerate() const { return max_abs == 0.0; }
    double modulus(double p) const;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace detail {

inline double pow_fast(double y, double p) {
    if (p == 1.0) {
        return y;
    }
    if (p == 2.0) {
        return y * y;
    }
    if (p == 3.0) {
        return y * y * y;
    }
    if (p == 4.0) {
        const double y2 = y * y;
        return y2 * y2;
    }
    return std::pow(y, p);
}

/// sum_t (|x_t - c| / m)^p with compensated summation.
template <typename Derived>
double scaled_power_sum(const Eigen::DenseBase<Derived>& x, double c, double m, double p) {
    CompensatedSum acc;
    const double inv = 1.0 / m;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        acc.add(pow_fast(std::abs(static_cast<double>(x.derived().coeff(i)) - c) * inv, p));
    }
    return acc.value();
}

template <typename Derived>
double max_abs_centered(const Eigen::DenseBase<Derived>& x, double c) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(x.derived().coeff(i)) - c));
    }
    return m;
}

template <typename Derived>
void require_nonempty(const Eigen::DenseBase<Derived>& x) {
    if (x.size() == 0) {
        throw DegenerateError("statistic requested on an empty path");
    }
}

} // namespace detail

inline double PathStats::modulus(double p) const {
    if (max_abs == 0.0) {
        return 0.0;
    }
    const auto it = scaled_pow.find(p);
    if (it == scaled_pow.end()) {
        throw ConfigError("modulus p was not requested in compute_stats");
    }
    return max_abs * std::pow(it->second, 1.0 / p);
}

/// Statistics of x - c where c = `center` (policy analytic) or the sample mean
/// (policy empirical); c = 0 when the policy is none.
template <typename Derived>
PathStats compute_stats(const Eigen::DenseBase<Derived>& x, const std::vector<double>& ps,
                        Centering centering = Centering::none, double center = 0.0) {
    detail::require_nonempty(x);
    if (ps.empty()) {
        throw ConfigError("compute_stats needs at least one p");
    }
    for (double p : ps) {
        if (!(p > 0.0)) {
            throw ConfigError("moduli need p > 0");
        }
    }
    PathStats s;
    s.n = x.size();
    s.centering = centering;
    CompensatedSum raw;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        raw.add(static_cast<double>(x.derived().coeff(i)));
    }
    switch (centering) {
    case Centering::none:
        s.center = 0.0;
        break;
    case Centering::analytic:
        s.center = center;
        break;
    case Centering::empirical:
        s.center = raw.value() / static_cast<double>(x.size());
        break;
    }
    s.sum = raw.value() - static_cast<double>(x.size()) * s.center;
    s.max_abs = detail::max_abs_centered(x, s.center);
    for (double p : ps) {
        s.scaled_pow[p] = s.max_abs > 0.0 ? detail::scaled_power_sum(x, s.center, s.max_abs, p) : 0.0;
    }
    return s;
}

/// Path overload: the analytic center is the model's stationary mean for
/// alpha > 1 and zero for alpha < 1.
inline PathStats compute_stats(const Path& path, const std::vector<double>& ps,
                               Centering centering = Centering::none) {
    double c = 0.0;
    if (centering == Centering::analytic && path.model.alpha > 1.0) {
        c = stationary_mean(path.model);
    }
    return compute_stats(path.values, ps, centering, c);
}

inline void require_nondegenerate(const PathStats& s) {
    if (s.degenerate()) {
        throw DegenerateError("all path entries are zero");
    }
}

/// S_n / M_n.
inline double ratio_max(const PathStats& s) {
    require_nondegenerate(s);
    return s.sum / s.max_abs;
}

/// S_n / gamma_{n,p}.
inline double studentized(const PathStats& s, double p) {
    require_nondegenerate(s);
    return s.sum / s.modulus(p);
}

/// Greenwood statistic T_{n,p} = sum X^p / (sum X)^p on a positive path.
template <typename Derived>
double greenwood(const Eigen::DenseBase<Derived>& x, double p) {
    detail::require_nonempty(x);
    if (!(p > 0.0)) {
        throw ConfigError("greenwood needs p > 0");
    }
    if (!(x.derived().minCoeff() > 0.0)) {
        throw DegenerateError("greenwood needs strictly positive entries");
    }
    const double m = x.derived().maxCoeff();
    const double num = detail::scaled_power_sum(x, 0.0, m, p);
    const double den = detail::scaled_power_sum(x, 0.0, m, 1.0);
    return num / std::pow(den, p);
}

/// gamma_{n,q} / gamma_{n,r}.
template <typename Derived>
double norm_ratio(const Eigen::DenseBase<Derived>& x, double q, double r) {
    detail::require_nonempty(x);
    if (!(q > 0.0 && r > 0.0)) {
        throw ConfigError("norm_ratio needs q, r > 0");
    }
    const double m = detail::max_abs_centered(x, 0.0);
    if (m == 0.0) {
        throw DegenerateError("all path entries are zero");
    }
    if (q == r) {
        return 1.0;
    }
    return std::pow(detail::scaled_power_sum(x, 0.0, m, q), 1.0 / q) /
           std::pow(detail::scaled_power_sum(x, 0.0, m, r), 1.0 / r);
}

/// ||X||_4^4 / ||X||_2^4.
template <typename Derived>
double kurtosis_ratio(const Eigen::DenseBase<Derived>& x) {
    detail::require_nonempty(x);
    const double m = detail::max_abs_centered(x, 0.0);
    if (m == 0.0) {
        throw DegenerateError("all path entries are zero");
    }
    const double s2 = detail::scaled_power_sum(x, 0.0, m, 2.0);
    return detail::scaled_power_sum(x, 0.0, m, 4.0) / (s2 * s2);
}

} // namespace heavysum
