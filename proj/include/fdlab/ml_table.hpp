#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fdlab/specfun.hpp"

namespace fdlab {

/// Tabulated z -> E_{a,b}(-z) on z >= 0 for fast per-mode evaluation.
///
/// Small z uses the power series, large z the asymptotic expansion, and the
/// band in between a log-uniform table with 6-point Lagrange interpolation.
class MittagLefflerTable {
public:
    static constexpr double kZLow = 1e-3;
    static constexpr double kZHigh = 1e4;
    static constexpr int kNodesPerUnit = 48;  // per unit of log z

    MittagLefflerTable(double a, double b) : a_(a), b_(b)
    {
        MLParams p(a, b);
        if (!(a < 1.0)) throw std::domain_error("MittagLefflerTable: order must be < 1");
        lo_ = std::log(kZLow);
        const double hi = std::log(kZHigh);
        step_ = 1.0 / kNodesPerUnit;
        const int count = static_cast<int>(std::ceil((hi - lo_) / step_)) + 6;
        values_.resize(count);
        for (int i = 0; i < count; ++i) values_[i] = mittag_leffler(p, -std::exp(lo_ + (i - 2) * step_));
        for (int k = 0; k < kTerms; ++k) {
            series_[k] = ((k % 2 == 0) ? 1.0 : -1.0) * rgamma(a * k + b);
            asym_[k] = ((k % 2 == 0) ? 1.0 : -1.0) * rgamma(b - a * (k + 1));
        }
    }

    double a() const { return a_; }
    double b() const { return b_; }

    double operator()(double z) const
    {
        if (z <= kZLow) return horner(series_, z);
        if (z >= kZHigh) return horner(asym_, 1.0 / z) / z;
        const double u = (std::log(z) - lo_) / step_ + 2.0;
        int i = static_cast<int>(std::floor(u)) - 2;
        i = std::clamp(i, 0, static_cast<int>(values_.size()) - 6);
        const double s = u - i;
        // Lagrange basis on nodes i .. i+5 from prefix and suffix products
        static constexpr double inv_den[6] = {-1.0 / 120, 1.0 / 24, -1.0 / 12, 1.0 / 12, -1.0 / 24, 1.0 / 120};
        double pre[6], suf[6];
        pre[0] = 1.0;
        suf[5] = 1.0;
        for (int j = 1; j < 6; ++j) pre[j] = pre[j - 1] * (s - (j - 1));
        for (int j = 4; j >= 0; --j) suf[j] = suf[j + 1] * (s - (j + 1));
        double sum = 0.0;
        for (int j = 0; j < 6; ++j) sum += pre[j] * suf[j] * inv_den[j] * values_[i + j];
        return sum;
    }

private:
    // z <= 1e-3 and 1/z <= 1e-4 make six terms exact to rounding
    static constexpr int kTerms = 6;

    static double horner(const std::array<double, kTerms>& c, double u)
    {
        double acc = 0.0;
        for (int k = kTerms - 1; k >= 0; --k) acc = acc * u + c[k];
        return acc;
    }

    std::array<double, kTerms> series_{};
    std::array<double, kTerms> asym_{};
    double a_;
    double b_;
    double lo_ = 0.0;
    double step_ = 0.0;
    std::vector<double> values_;
};

}  // namespace fdlab
