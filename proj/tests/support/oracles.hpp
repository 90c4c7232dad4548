#pragma once

// Reference implementations used only by the tests: deliberately naive,
// sharing no code with the library beyond the public types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "rap/geometry.hpp"
#include "rap/spatial_index.hpp"

namespace rap::oracle {

/// Linear scan of min(wall gap, signed gaps) in insertion order.
inline MaxRadius brute_force_max_radius(const SphereTree& tree, const PointD& p, const BoxDomain& box) {
    MaxRadius best{wall_gap(p, box), std::nullopt};
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const double g = signed_gap(p, tree.sphere(i));
        if (g < best.radius) best = {g, i};
    }
    return best;
}

/// sum r^alpha accumulated in long double.
inline long double moment_long(std::span<const double> radii, double alpha) {
    long double s = 0.0L;
    for (double r : radii) s += std::pow(static_cast<long double>(r), static_cast<long double>(alpha));
    return s;
}

namespace detail {
inline long double simpson(const std::function<long double(long double)>& f, long double a, long double b,
                           long double fa, long double fm, long double fb, long double whole, long double eps,
                           int depth) {
    const long double m = 0.5L * (a + b);
    const long double lm = 0.5L * (a + m);
    const long double rm = 0.5L * (m + b);
    const long double flm = f(lm);
    const long double frm = f(rm);
    const long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
    const long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
    const long double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0L * eps) return left + right + delta / 15.0L;
    return simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature in long double on a finite interval.
inline long double integrate(const std::function<long double(long double)>& f, long double a, long double b,
                             long double eps = 1e-14L, int max_depth = 48) {
    const long double fa = f(a);
    const long double fb = f(b);
    const long double fm = f(0.5L * (a + b));
    const long double whole = (b - a) / 6.0L * (fa + 4.0L * fm + fb);
    return detail::simpson(f, a, b, fa, fm, fb, whole, eps, max_depth);
}

/// Classical RK4 for y' = g(x, y) from x0 to x1 in `steps` steps.
inline long double rk4(const std::function<long double(long double, long double)>& g, long double x0,
                       long double y0, long double x1, int steps) {
    const long double h = (x1 - x0) / steps;
    long double x = x0;
    long double y = y0;
    for (int i = 0; i < steps; ++i) {
        const long double k1 = g(x, y);
        const long double k2 = g(x + h / 2, y + h / 2 * k1);
        const long double k3 = g(x + h / 2, y + h / 2 * k2);
        const long double k4 = g(x + h, y + h * k3);
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        x += h;
    }
    return y;
}

/// Inverse standard normal CDF by bisection on erfc; slow but independent.
inline double normal_quantile(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace rap::oracle
