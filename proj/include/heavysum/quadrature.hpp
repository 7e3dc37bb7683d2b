#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <sstream>
#include <type_traits>
#include <vector>

#include "heavysum/errors.hpp"

namespace heavysum {

template <typename T>
struct QuadResult {
    T value{};
    double abs_error = 0.0;
    int evaluations = 0;
    int intervals = 0;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int max_intervals = 4000;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <typename T, typename F>
std::pair<T, double> gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const T fc = f(c);
    T kron = fc * kronrod_w[7];
    T gauss = fc * gauss_w[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kronrod_x[j];
        const T f1 = f(c - dx);
        const T f2 = f(c + dx);
        kron += (f1 + f2) * kronrod_w[j];
        if (j % 2 == 1) {
            gauss += (f1 + f2) * gauss_w[j / 2];
        }
    }
    return {kron * h, magnitude((kron - gauss) * h)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on [a, b].
///
/// Works for real or complex integrands. Throws NumericalError when the
/// error estimate does not drop below max(abs_tol, rel_tol * |I|) within
/// max_intervals bisections.
template <typename F>
auto integrate(F&& f, double a, double b, const QuadOptions& opt = {})
    -> QuadResult<std::decay_t<decltype(f(a))>> {
    using T = std::decay_t<decltype(f(a))>;
    struct Piece {
        double a, b;
        T value;
        double err;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    QuadResult<T> out;
    if (a == b) {
        return out;
    }
    std::priority_queue<Piece> heap;
    auto [v0, e0] = detail::gk15<T>(f, a, b);
    heap.push({a, b, v0, e0});
    out.evaluations = 15;
    T total = v0;
    double err = e0;
    while (true) {
        const double target = std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
        if (err <= target) {
            break;
        }
        if (static_cast<int>(heap.size()) >= opt.max_intervals) {
            std::ostringstream os;
            os << "quadrature on [" << a << ", " << b << "] did not converge: error estimate " << err
               << " > tolerance " << target << " after " << heap.size() << " intervals";
            throw NumericalError(os.str());
        }
        Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto [vl, el] = detail::gk15<T>(f, worst.a, mid);
        auto [vr, er] = detail::gk15<T>(f, mid, worst.b);
        out.evaluations += 30;
        total += vl + vr - worst.value;
        err += el + er - worst.err;
        heap.push({worst.a, mid, vl, el});
        heap.push({mid, worst.b, vr, er});
    }
    // Re-sum to shed drift from the running updates.
    T sum{};
    double esum = 0.0;
    out.intervals = static_cast<int>(heap.size());
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().err;
        heap.pop();
    }
    out.value = sum;
    out.abs_error = esum;
    return out;
}

/// Integral over [a, inf) via the map y = a + s / (1 - s), s in [0, 1).
template <typename F>
auto integrate_to_infinity(F&& f, double a, const QuadOptions& opt = {})
    -> QuadResult<std::decay_t<decltype(f(a))>> {
    auto g = [&](double s) {
        const double one_minus = 1.0 - s;
        return f(a + s / one_minus) * (1.0 / (one_minus * one_minus));
    };
    return integrate(g, 0.0, 1.0, opt);
}

} // namespace heavysum
