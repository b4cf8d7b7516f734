#pragma once

// Scalar special functions: Gamma, the fractional integration kernel g_rho,
// the two-parameter Mittag-Leffler function on the real line, the one-sided
// alpha-stable density and the subordination weight built from it.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fdlab/quadrature.hpp"

namespace fdlab {

namespace detail {

[[noreturn]] inline void domain_fail(const char* fn, const std::string& what)
{
    std::ostringstream os;
    os << fn << ": " << what;
    throw std::domain_error(os.str());
}

}  // namespace detail

/// Parameters of E_{a,b}: 0 < a <= 1, b > 0.
struct MLParams {
    double a;
    double b;

    MLParams(double a_, double b_) : a(a_), b(b_)
    {
        if (!(a > 0.0 && a <= 1.0)) detail::domain_fail("MLParams", "order a must lie in (0, 1]");
        if (!(b > 0.0)) detail::domain_fail("MLParams", "second parameter b must be positive");
    }
};

/// Index of a one-sided stable law, strictly inside (0, 1).
class StableIndex {
public:
    explicit StableIndex(double alpha) : alpha_(alpha)
    {
        if (!(alpha > 0.0 && alpha < 1.0)) detail::domain_fail("StableIndex", "alpha must lie in (0, 1)");
    }
    double value() const { return alpha_; }

private:
    double alpha_;
};

inline double gamma_fn(double x)
{
    if (!(x > 0.0) || !std::isfinite(x)) detail::domain_fail("gamma_fn", "argument must be positive and finite");
    return std::tgamma(x);
}

/// g_rho(t) = t^(rho-1) / Gamma(rho).
inline double g_kernel(double rho, double t)
{
    if (!(rho > 0.0 && rho <= 1.0)) detail::domain_fail("g_kernel", "rho must lie in (0, 1]");
    if (!(t > 0.0)) detail::domain_fail("g_kernel", "t must be positive (t = 0 is the singular endpoint)");
    return std::pow(t, rho - 1.0) / std::tgamma(rho);
}

/// Same formula without the rho <= 1 restriction; used for antiderivatives
/// g_{rho+1}(t) = t^rho / Gamma(rho + 1), with g_{rho}(0) = 0 for rho > 1.
inline double g_kernel_any(double rho, double t)
{
    if (t <= 0.0) return 0.0;
    return std::exp((rho - 1.0) * std::log(t) - std::lgamma(rho));
}

/// 1 / Gamma(x) for any real x, zero at the poles.
inline double rgamma(double x)
{
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

namespace detail {

// Power series sum_k z^k / Gamma(a k + b). Used for small |z| with z < 0 and
// for all z > 0 (no cancellation there).
inline double ml_series(double a, double b, double z)
{
    if (z == 0.0) return rgamma(b);
    if (z > 0.0) {
        const double lz = std::log(z);
        double sum = 0.0;
        double peak = 0.0;
        for (int k = 0; k < 200000; ++k) {
            const double arg = a * k + b;
            const double lt = k * lz - std::lgamma(arg);
            const double term = std::exp(lt);
            sum += term;
            peak = std::max(peak, term);
            if (term < 1e-18 * sum && term < peak && k > 2) break;
        }
        return sum;
    }
    double sum = 0.0;
    double comp = 0.0;  // Kahan compensation
    double zk = 1.0;
    for (int k = 0; k < 2000; ++k) {
        const double term = zk * rgamma(a * k + b);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (k > 4 && std::abs(term) < 1e-18 * std::abs(sum) && std::abs(zk) < 1.0) break;
        zk *= z;
    }
    return sum;
}

// Algebraic asymptotic expansion of E_{a,b}(-x) for large x and a < 1.
inline double ml_asymptotic_negative(double a, double b, double x)
{
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    double xk = 1.0;
    for (int k = 1; k <= 40; ++k) {
        xk /= x;
        const double term = ((k % 2 == 1) ? 1.0 : -1.0) * xk * rgamma(b - a * k);
        if (std::abs(term) > prev && std::abs(term) > 0.0) break;  // divergent tail
        sum += term;
        if (term != 0.0) prev = std::abs(term);
        if (term != 0.0 && std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// Integral representation on the negative real axis (0 < a < 1, b < 1 + a):
// E_{a,b}(-x) = int_0^inf K(chi) dchi, the contour having been collapsed onto
// the positive real axis.
inline double ml_integral_negative(double a, double b, double x)
{
    const double pi = std::numbers::pi;
    const double s1 = std::sin(pi * (1.0 - b));
    const double s2 = std::sin(pi * (1.0 - b + a));
    const double ca = std::cos(a * pi);
    const double pw = (1.0 - b) / a;
    auto kernel = [&](double chi) {
        if (chi <= 0.0) return 0.0;
        const double e = std::exp(-std::pow(chi, 1.0 / a));
        if (e == 0.0) return 0.0;
        const double num = chi * s1 + x * s2;
        const double den = chi * chi + 2.0 * chi * x * ca + x * x;
        return std::pow(chi, pw) * e * num / den / (a * pi);
    };
    const double chi_max = std::pow(745.0, a);
    std::vector<double> breaks{0.0, chi_max};
    if (ca < 0.0) {
        const double peak = -x * ca;
        if (peak < chi_max) breaks.push_back(peak);
    }
    breaks.push_back(std::min(1.0, chi_max));
    return quad::piecewise_tanh_sinh(kernel, breaks);
}

inline constexpr double kMlSeriesRadius = 1.0;   // |z| crossover for z < 0
inline constexpr double kMlAsymptoticStart = 1e4;

inline double ml_negative(double a, double b, double x)
{
    if (x <= kMlSeriesRadius) return ml_series(a, b, -x);
    if (x >= kMlAsymptoticStart) return ml_asymptotic_negative(a, b, x);
    if (b >= 1.0 + a) {
        // E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        return (ml_negative(a, b - a, x) - rgamma(b - a)) / (-x);
    }
    return ml_integral_negative(a, b, x);
}

}  // namespace detail

/// Two-parameter Mittag-Leffler function E_{a,b}(z) for real z.
///
/// Negative arguments use the power series for |z| <= 1, the collapsed
/// contour integral up to 1e4 and the algebraic asymptotic expansion beyond.
/// Positive arguments are summed directly (all terms positive); the result
/// overflows to +inf when z^(1/a) exceeds the double range.
inline double mittag_leffler(const MLParams& p, double z)
{
    if (!std::isfinite(z)) detail::domain_fail("mittag_leffler", "argument must be finite");
    const double a = p.a;
    const double b = p.b;
    if (z == 0.0) return rgamma(b);
    if (a == 1.0) {
        if (b == 1.0) return std::exp(z);
        if (b == 2.0) return std::expm1(z) / z;
        if (std::abs(z) <= detail::kMlSeriesRadius || z > 0.0) return detail::ml_series(a, b, z);
        detail::domain_fail("mittag_leffler", "a = 1 is supported for b in {1, 2} or |z| <= 1");
    }
    if (z > 0.0) {
        if (std::log(z) / a > std::log(705.0)) return std::numeric_limits<double>::infinity();
        return detail::ml_series(a, b, z);
    }
    return detail::ml_negative(a, b, -z);
}

namespace detail {

// Zolotarev's function for the one-sided law; strictly increasing on (0, pi)
// from c_alpha to +inf.
inline double zolotarev_log_u(double a, double phi)
{
    if (phi < 1e-7) {
        const double c = (1.0 - a) * std::pow(a, a / (1.0 - a));
        return std::log(c);
    }
    return (std::log(std::sin(a * phi)) - std::log(std::sin(phi))) / (1.0 - a) +
           std::log(std::sin((1.0 - a) * phi)) - std::log(std::sin(a * phi));
}

}  // namespace detail

/// c_alpha = (1 - alpha) alpha^(alpha / (1 - alpha)).
inline double stable_rate_constant(const StableIndex& idx)
{
    const double a = idx.value();
    return (1.0 - a) * std::pow(a, a / (1.0 - a));
}

/// Natural logarithm of the one-sided stable density; finite where the
/// density itself underflows.
inline double log_stable_density(const StableIndex& idx, double tau)
{
    if (!(tau > 0.0) || !std::isfinite(tau)) detail::domain_fail("stable_density", "tau must be positive and finite");
    const double a = idx.value();
    const double c = stable_rate_constant(idx);
    const double y = std::pow(tau, -a / (1.0 - a));
    const double lc = std::log(c);
    const double pi = std::numbers::pi;

    // integrand U exp(-y (U - c)); the factor exp(-y c) is carried separately
    auto integrand = [&](double phi) {
        if (phi >= pi) return 0.0;
        const double lu = detail::zolotarev_log_u(a, phi);
        if (!std::isfinite(lu)) return 0.0;
        // U >= c analytically; rounding near phi = 0 must not flip the sign
        const double ex = std::max(0.0, y * c * std::expm1(lu - lc));
        if (ex > 745.0) return 0.0;
        return std::exp(lu - ex);
    };
    auto excess = [&](double phi) { return y * c * std::expm1(detail::zolotarev_log_u(a, phi) - lc); };

    std::vector<double> breaks{0.0, pi};
    const double hi = pi * (1.0 - 1e-15);
    // width of the peak at phi = 0 (small tau)
    for (double level : {1.0, 30.0}) {
        if (excess(hi) > level) breaks.push_back(quad::bisect([&](double p) { return excess(p) - level; }, 0.0, hi));
    }
    // interior maximum of U exp(-y U) at y U = 1 (large tau)
    if (y * c < 1.0) {
        auto f = [&](double p) { return y * std::exp(detail::zolotarev_log_u(a, p)) - 1.0; };
        if (f(hi) > 0.0) {
            const double star = quad::bisect(f, 0.0, hi);
            breaks.push_back(star);
            // tail of the peak toward pi
            auto g = [&](double p) { return y * std::exp(detail::zolotarev_log_u(a, p)) - 40.0; };
            if (g(hi) > 0.0) breaks.push_back(quad::bisect(g, star, hi));
        }
    }
    const double integral = quad::piecewise_tanh_sinh(integrand, breaks, 1e-12);
    return std::log(a / ((1.0 - a) * pi)) - std::log(tau) / (1.0 - a) - y * c + std::log(integral);
}

/// Density of the standard one-sided alpha-stable law (Laplace transform
/// exp(-lambda^alpha)), evaluated from Zolotarev's single-integral form.
inline double stable_density(const StableIndex& idx, double tau)
{
    return std::exp(log_stable_density(idx, tau));
}

/// M_alpha(s) = (1/alpha) s^(-1-1/alpha) w_alpha(s^(-1/alpha)): the mixing
/// density of the subordinated kernel Z. Unit mass; first moment 1/Gamma(1+alpha).
inline double subordination_weight(const StableIndex& idx, double s)
{
    if (!(s > 0.0) || !std::isfinite(s)) detail::domain_fail("subordination_weight", "s must be positive and finite");
    const double a = idx.value();
    const double tau = std::pow(s, -1.0 / a);
    if (!(tau > 0.0) || !std::isfinite(tau)) return 0.0;
    const double lw = log_stable_density(idx, tau);
    return std::exp(lw - std::log(a) - (1.0 + 1.0 / a) * std::log(s));
}

}  // namespace fdlab
