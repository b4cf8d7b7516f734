#pragma once

#include <cmath>
#include <vector>

namespace fdlab::oracle {

/// v(t) = c + (g_a * v^g)(t) for constant data, as a power series in t^a.
/// Valid up to the radius of convergence, i.e. before the scalar blow-up.
inline double scalar_volterra(double a, double g, double c, double t, int terms = 400)
{
    std::vector<double> A(terms + 1), Q(terms + 1);
    A[0] = c;
    Q[0] = std::pow(c, g);
    for (int k = 0; k < terms; ++k) {
        A[k + 1] = std::exp(std::lgamma(k * a + 1) - std::lgamma(k * a + a + 1)) * Q[k];
        const int m = k + 1;
        double s = 0.0;
        for (int j = 1; j <= m; ++j) s += (g * j - m + j) * A[j] * Q[m - j];
        Q[m] = s / (m * A[0]);
    }
    const double x = std::pow(t, a);
    double v = 0.0, xp = 1.0;
    for (int k = 0; k <= terms; ++k) {
        v += A[k] * xp;
        xp *= x;
    }
    return v;
}

}  // namespace fdlab::oracle
