#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fdlab::quad {

// Default tolerances for adaptive rules.
inline constexpr double kAbsTol = 1e-10;
inline constexpr double kRelTol = 1e-8;

/// Adaptive Gauss-Kronrod (15-point) on [a, b]; a or b may be infinite.
template <class F>
double adaptive(F&& f, double a, double b, double rel_tol = kRelTol, unsigned max_depth = 20)
{
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    double l1 = 0.0;
    return gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, rel_tol, &err, &l1);
}

/// Double-exponential rule on a finite interval. Robust to integrable endpoint
/// singularities and to integrands concentrated at an endpoint.
template <class F>
double tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-13)
{
    if (!(b > a)) return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
    double err = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    return integrator.integrate(
        [&](double x, double) { return f(x); }, a, b, rel_tol, &err, &l1, &levels);
}

/// Tanh-sinh over consecutive breakpoints.
template <class F>
double piecewise_tanh_sinh(F&& f, std::vector<double> breaks, double rel_tol = 1e-13)
{
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) sum += tanh_sinh(f, breaks[i], breaks[i + 1], rel_tol);
    return sum;
}

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Composite 16-point Gauss-Legendre on `panels` equal panels of [a, b].
inline Rule gauss_legendre_panels(double a, double b, int panels)
{
    using G = boost::math::quadrature::gauss<double, 16>;
    const auto& abs = G::abscissa();
    const auto& wts = G::weights();
    Rule r;
    const double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * w;
        const double half = 0.5 * w;
        for (std::size_t i = 0; i < abs.size(); ++i) {
            // boost stores the non-negative half of a symmetric rule
            if (abs[i] == 0.0) {
                r.nodes.push_back(mid);
                r.weights.push_back(wts[i] * half);
                continue;
            }
            r.nodes.push_back(mid - half * abs[i]);
            r.weights.push_back(wts[i] * half);
            r.nodes.push_back(mid + half * abs[i]);
            r.weights.push_back(wts[i] * half);
        }
    }
    return r;
}

/// Bisection root of a monotone function on [lo, hi]; assumes a sign change.
template <class F>
double bisect(F&& f, double lo, double hi, int iters = 200)
{
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace fdlab::quad
