#pragma once

// Spectral measure on the unit sphere (d = 1, 2), the angular function
// omega_mu and the beta-homogeneous symbol psi.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/quadrature.hpp"

namespace fdlab {

enum class MeasureKind { atoms, density };

/// A point mass on S^0 = {-1, +1}.
struct Atom {
    double direction;  // +1 or -1
    double weight;
};

class SpectralMeasure {
public:
    /// d = 1: weights at +1 and -1.
    static SpectralMeasure two_atom(double w_plus, double w_minus)
    {
        SpectralMeasure m;
        m.dim_ = 1;
        m.kind_ = MeasureKind::atoms;
        m.atoms_ = {{+1.0, w_plus}, {-1.0, w_minus}};
        m.descriptor_ = {{"kind", "two-atom"}, {"w_plus", w_plus}, {"w_minus", w_minus}};
        return m;
    }

    /// d = 1 symmetric atoms of total mass `mass`.
    static SpectralMeasure symmetric_atoms(double mass = 1.0)
    {
        auto m = two_atom(0.5 * mass, 0.5 * mass);
        m.descriptor_["mass"] = mass;
        return m;
    }

    /// d = 2 density on the circle, parametrised by angle.
    static SpectralMeasure circle_density(std::function<double(double)> rho, nlohmann::json descriptor)
    {
        SpectralMeasure m;
        m.dim_ = 2;
        m.kind_ = MeasureKind::density;
        m.density_ = std::move(rho);
        m.descriptor_ = std::move(descriptor);
        return m;
    }

    /// Uniform density mass / (2 pi).
    static SpectralMeasure uniform_circle(double mass = 1.0)
    {
        const double c = mass / (2.0 * std::numbers::pi);
        return circle_density([c](double) { return c; }, {{"kind", "uniform"}, {"mass", mass}});
    }

    /// Density (mass / 2 pi) (1 + eps cos(2 theta)); positive for |eps| < 1.
    static SpectralMeasure cosine_circle(double mass, double eps)
    {
        const double c = mass / (2.0 * std::numbers::pi);
        return circle_density([c, eps](double th) { return c * (1.0 + eps * std::cos(2.0 * th)); },
                              {{"kind", "cosine"}, {"mass", mass}, {"epsilon", eps}});
    }

    int dim() const { return dim_; }
    MeasureKind kind() const { return kind_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    double density(double theta) const { return density_ ? density_(theta) : 0.0; }
    const nlohmann::json& descriptor() const { return descriptor_; }

    double total_mass() const
    {
        if (kind_ == MeasureKind::atoms) {
            double s = 0.0;
            for (const auto& a : atoms_) s += a.weight;
            return s;
        }
        return quad::adaptive([this](double th) { return density(th); }, 0.0, 2.0 * std::numbers::pi, 1e-13);
    }

private:
    SpectralMeasure() = default;

    int dim_ = 1;
    MeasureKind kind_ = MeasureKind::atoms;
    std::vector<Atom> atoms_;
    std::function<double(double)> density_;
    nlohmann::json descriptor_;
};

/// omega_mu(theta) = int_{S^{d-1}} |theta . eta|^beta mu(d eta).
inline double omega_mu(const SpectralMeasure& m, double beta, std::span<const double> theta)
{
    if (static_cast<int>(theta.size()) != m.dim()) throw std::domain_error("omega_mu: direction has wrong dimension");
    double norm2 = 0.0;
    for (double c : theta) norm2 += c * c;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw std::domain_error("omega_mu: direction is not a unit vector");

    if (m.kind() == MeasureKind::atoms) {
        double s = 0.0;
        for (const auto& a : m.atoms()) s += a.weight * std::pow(std::abs(theta[0] * a.direction), beta);
        return s;
    }
    const double pi = std::numbers::pi;
    const double th = std::atan2(theta[1], theta[0]);
    // |cos(phi - th)|^beta has kinks at th +- pi/2; integrate between them
    auto f = [&](double phi) { return std::pow(std::abs(std::cos(phi - th)), beta) * m.density(phi); };
    return quad::tanh_sinh(f, th - 0.5 * pi, th + 0.5 * pi, 1e-14) +
           quad::tanh_sinh(f, th + 0.5 * pi, th + 1.5 * pi, 1e-14);
}

/// The symbol psi(xi) = |xi|^beta omega_mu(xi/|xi|), with omega tabulated on
/// the sphere at construction.
class StableSymbol {
public:
    static constexpr int kAngularNodes = 512;

    StableSymbol(double beta, SpectralMeasure measure) : beta_(beta), measure_(std::move(measure))
    {
        if (!(beta > 0.0 && beta < 2.0)) throw std::domain_error("StableSymbol: beta must lie in (0, 2)");
        if (measure_.dim() == 1) {
            const double plus[1] = {1.0};
            const double minus[1] = {-1.0};
            omega_table_ = {omega_mu(measure_, beta_, plus), omega_mu(measure_, beta_, minus)};
        } else {
            omega_table_.resize(kAngularNodes);
            for (int j = 0; j < kAngularNodes; ++j) {
                const double th = 2.0 * std::numbers::pi * j / kAngularNodes;
                const double dir[2] = {std::cos(th), std::sin(th)};
                omega_table_[j] = omega_mu(measure_, beta_, dir);
            }
        }
        const auto [lo, hi] = std::minmax_element(omega_table_.begin(), omega_table_.end());
        if (!(*lo > 0.0)) throw std::domain_error("StableSymbol: omega_mu must be strictly positive");
        isotropic_ = (*hi - *lo) <= 1e-12 * *hi;
        const std::size_t half = omega_table_.size() / 2;
        for (std::size_t j = 0; j < omega_table_.size(); ++j) {
            if (std::abs(omega_table_[j] - omega_table_[(j + half) % omega_table_.size()]) > 1e-10 * *hi)
                throw std::domain_error("StableSymbol: omega_mu is not centrally symmetric");
        }
    }

    double beta() const { return beta_; }
    int dim() const { return measure_.dim(); }
    const SpectralMeasure& measure() const { return measure_; }
    const std::vector<double>& omega_table() const { return omega_table_; }
    bool isotropic() const { return isotropic_; }

    /// omega at a direction given by its angle (d = 2) or sign (d = 1).
    double omega_at_angle(double theta) const
    {
        if (dim() == 1) return std::cos(theta) >= 0.0 ? omega_table_[0] : omega_table_[1];
        if (isotropic_) return omega_table_[0];
        // periodic 4-point Lagrange interpolation
        const int n = static_cast<int>(omega_table_.size());
        const double u = theta / (2.0 * std::numbers::pi) * n;
        const double fl = std::floor(u);
        const double s = u - fl;
        const int i0 = static_cast<int>(fl);
        auto at = [&](int i) { return omega_table_[((i % n) + n) % n]; };
        const double fm1 = at(i0 - 1), f0 = at(i0), f1 = at(i0 + 1), f2 = at(i0 + 2);
        return -s * (s - 1.0) * (s - 2.0) / 6.0 * fm1 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * f0 -
               (s + 1.0) * s * (s - 2.0) / 2.0 * f1 + (s + 1.0) * s * (s - 1.0) / 6.0 * f2;
    }

    double operator()(std::span<const double> xi) const
    {
        if (dim() == 1) {
            const double r = std::abs(xi[0]);
            if (r == 0.0) return 0.0;
            return std::pow(r, beta_) * (xi[0] > 0.0 ? omega_table_[0] : omega_table_[1]);
        }
        const double r = std::hypot(xi[0], xi[1]);
        if (r == 0.0) return 0.0;
        return std::pow(r, beta_) * omega_at_angle(std::atan2(xi[1], xi[0]));
    }

    nlohmann::json descriptor() const { return {{"beta", beta_}, {"measure", measure_.descriptor()}}; }

private:
    double beta_;
    SpectralMeasure measure_;
    std::vector<double> omega_table_;
    bool isotropic_ = false;
};

inline double psi(const StableSymbol& sym, std::span<const double> xi) { return sym(xi); }

/// Outcome of the positivity / symmetry / smoothness screening of a measure.
struct H1Report {
    bool pass = false;
    double min_density = 0.0;
    double symmetry_residual = 0.0;
    // max |finite-difference derivative| of orders 1..4 (d = 2 densities only)
    std::array<double, 4> derivative_max{};
    std::string note;

    nlohmann::json to_json() const
    {
        return {{"pass", pass},
                {"min_density", min_density},
                {"symmetry_residual", symmetry_residual},
                {"derivative_max", derivative_max},
                {"note", note}};
    }
};

/// Numerical screen for the positivity hypothesis on the spectral measure.
/// Smoothness is only reported (finite differences cannot certify it).
inline H1Report check_h1(const SpectralMeasure& m)
{
    H1Report r;
    if (m.kind() == MeasureKind::atoms) {
        double wp = 0.0, wm = 0.0;
        for (const auto& a : m.atoms()) (a.direction > 0 ? wp : wm) += a.weight;
        r.min_density = std::min(wp, wm);
        r.symmetry_residual = std::abs(wp - wm);
        r.note = "atoms on S^0; smoothness not applicable";
    } else {
        constexpr int n = 1024;
        const double h = 2.0 * std::numbers::pi / n;
        std::vector<double> v(n);
        double mn = std::numeric_limits<double>::infinity();
        double sym = 0.0;
        for (int j = 0; j < n; ++j) {
            const double th = j * h;
            v[j] = m.density(th);
            mn = std::min(mn, v[j]);
            sym = std::max(sym, std::abs(v[j] - m.density(th + std::numbers::pi)));
        }
        r.min_density = mn;
        r.symmetry_residual = sym;
        // repeated periodic forward differences
        std::vector<double> d = v;
        for (int order = 0; order < 4; ++order) {
            std::vector<double> nd(n);
            double mx = 0.0;
            for (int j = 0; j < n; ++j) {
                nd[j] = (d[(j + 1) % n] - d[j]) / h;
                mx = std::max(mx, std::abs(nd[j]));
            }
            r.derivative_max[order] = mx;
            d = std::move(nd);
        }
        r.note = "finite-difference derivatives are diagnostics only; differentiability is not certified";
    }
    r.pass = r.min_density > 0.0 && r.symmetry_residual <= 1e-10;
    return r;
}

}  // namespace fdlab
