#pragma once

// Least-squares helpers for exponent fits.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

namespace fdlab::fit {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t samples = 0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit linear(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t m = x.size();
    if (m < 2 || y.size() != m) throw std::invalid_argument("fit::linear: need at least two paired samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit::linear: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.samples = m;
    if (m > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = y[i] - f.slope * x[i] - f.intercept;
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / double(m - 2) / sxx);
    }
    return f;
}

struct ModelFit {
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double exponent_stderr = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> coefficients;
    double rms_rel_residual = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples = 0;
};

/// Fills row[j] = basis_j(p) for sample i.
using BasisFn = std::function<void(double p, std::size_t i, std::span<double> row)>;

/// Fits data_i ~ sum_j c_j basis_j(p, i) with one nonlinear exponent p in
/// [lo, hi] and linear coefficients c, minimising relative residuals.
inline ModelFit model(const std::vector<double>& data, std::size_t nbasis, const BasisFn& basis, double lo, double hi)
{
    const std::size_t m = data.size();
    if (m < nbasis + 2) throw std::invalid_argument("fit::model: too few samples");
    for (double v : data)
        if (!(v != 0.0) || !std::isfinite(v)) throw std::invalid_argument("fit::model: data must be finite and nonzero");

    Eigen::MatrixXd a(m, nbasis);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    std::vector<double> row(nbasis);
    auto assemble = [&](double p) {
        for (std::size_t i = 0; i < m; ++i) {
            basis(p, i, row);
            for (std::size_t j = 0; j < nbasis; ++j) a(i, j) = row[j] / data[i];
        }
    };
    auto solve = [&](double p, Eigen::VectorXd& c) {
        assemble(p);
        // column equilibration before the pivoted QR
        Eigen::VectorXd scale(nbasis);
        for (std::size_t j = 0; j < nbasis; ++j) {
            const double nj = a.col(j).norm();
            scale(j) = nj > 0.0 ? 1.0 / nj : 1.0;
        }
        Eigen::MatrixXd as = a * scale.asDiagonal();
        Eigen::VectorXd cs = as.colPivHouseholderQr().solve(ones);
        c = scale.asDiagonal() * cs;
        return (a * c - ones).squaredNorm();
    };

    Eigen::VectorXd c;
    constexpr int scan = 240;
    double best_p = lo, best_r = std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i <= scan; ++i) {
        const double p = lo + (hi - lo) * i / scan;
        const double r = solve(p, c);
        if (r < best_r) {
            best_r = r;
            best_p = p;
            best_i = i;
        }
    }
    const double step = (hi - lo) / scan;
    const double blo = std::max(lo, lo + (best_i - 1) * step);
    const double bhi = std::min(hi, lo + (best_i + 1) * step);
    const auto res = boost::math::tools::brent_find_minima([&](double p) { return solve(p, c); }, blo, bhi, 50);
    if (res.second < best_r) best_p = res.first;

    ModelFit f;
    f.samples = m;
    const double rss = solve(best_p, c);
    f.exponent = best_p;
    f.coefficients.assign(c.data(), c.data() + nbasis);
    f.rms_rel_residual = std::sqrt(rss / double(m));

    // linearised covariance of (p, c)
    const double dp = 1e-6 * std::max(1.0, std::abs(best_p));
    Eigen::MatrixXd jac(m, nbasis + 1);
    Eigen::VectorXd cp;
    assemble(best_p + dp);
    const Eigen::VectorXd rp = a * c;
    assemble(best_p - dp);
    const Eigen::VectorXd rm = a * c;
    assemble(best_p);
    jac.col(0) = (rp - rm) / (2.0 * dp);
    jac.rightCols(nbasis) = a;
    const double dof = double(m) - double(nbasis) - 1.0;
    if (dof > 0) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
        if (lu.isInvertible()) {
            const double var = rss / dof * lu.inverse()(0, 0);
            f.exponent_stderr = var >= 0.0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return f;
}

}  // namespace fdlab::fit
