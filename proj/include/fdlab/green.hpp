#pragma once

#include <cmath>
#include <sstream>

#include "fdlab/grid.hpp"
#include "fdlab/spectral.hpp"

namespace fdlab {

/// Spectral length scale of G(t, .): t^(1/beta).
inline double green_scale(const StableSymbol& sym, double t) { return std::pow(t, 1.0 / sym.beta()); }

/// Throws ResolutionError unless 4h <= t^(1/beta) <= L/8.
inline void check_green_resolution(const StableSymbol& sym, double t, const Grid& grid)
{
    const double s = green_scale(sym, t);
    if (s < 4.0 * grid.h() || s > grid.L / 8.0) {
        std::ostringstream os;
        os << "green_function: kernel scale t^(1/beta) = " << s << " outside [4h, L/8] = [" << 4.0 * grid.h() << ", "
           << grid.L / 8.0 << "]; ";
        if (s < 4.0 * grid.h())
            os << "refine the grid (increase n) or use t >= " << std::pow(4.0 * grid.h(), sym.beta());
        else
            os << "enlarge the domain (increase L) or use t <= " << std::pow(grid.L / 8.0, sym.beta());
        throw ResolutionError(os.str());
    }
}

/// Fourier multiplier exp(-t psi) on the half spectrum.
inline std::vector<double> green_spectrum(const StableSymbol& sym, double t, const Grid& grid)
{
    return spectrum_of(grid, [&](const std::array<double, 2>& xi) {
        return std::exp(-t * sym(std::span<const double>(xi.data(), grid.dim)));
    });
}

/// G(t, .) on the periodic grid by spectral synthesis of exp(-t psi(xi)).
inline Field green_function(const StableSymbol& sym, double t, const Grid& grid)
{
    if (!(t > 0.0)) throw std::domain_error("green_function: t must be positive");
    if (sym.dim() != grid.dim) throw GridMismatch("green_function: symbol and grid dimensions differ");
    check_green_resolution(sym, t, grid);
    return synthesize(grid, green_spectrum(sym, t, grid), t);
}

}  // namespace fdlab
