#include "heavysum/ks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "heavysum/errors.hpp"

namespace heavysum {

double ks_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() == 0 || b.size() == 0) {
        throw ConfigError("KS distance needs two non-empty samples");
    }
    std::vector<double> x(a.data(), a.data() + a.size());
    std::vector<double> y(b.data(), b.data() + b.size());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double m = static_cast<double>(x.size());
    const double n = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) {
            ++i;
        }
        while (j < y.size() && y[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
    }
    return d;
}

double ks_critical_value(std::int64_t m, std::int64_t n, double level) {
    if (m < 1 || n < 1 || !(level > 0.0 && level < 1.0)) {
        throw ConfigError("KS critical value needs positive sizes and level in (0,1)");
    }
    const double c = std::sqrt(-std::log(level / 2.0) / 2.0);
    return c * std::sqrt(static_cast<double>(m + n) / (static_cast<double>(m) * static_cast<double>(n)));
}

double ks_pvalue(double distance, std::int64_t m, std::int64_t n) {
    const double ne = static_cast<double>(m) * static_cast<double>(n) / static_cast<double>(m + n);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * distance;
    if (lambda < 1e-3) {
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) {
            break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

} // namespace heavysum
