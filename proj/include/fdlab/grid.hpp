#pragma once

// Periodic uniform mesh on [-L, L)^d, sampled fields and the FFT machinery
// behind spectral synthesis and circular convolution.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>
#include <nlohmann/json.hpp>

namespace fdlab {

class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Grid {
    int dim = 1;
    int n = 64;
    double L = 1.0;

    Grid() = default;
    Grid(int d, int n_, double L_) : dim(d), n(n_), L(L_)
    {
        if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
        if (n < 64 || (n & (n - 1)) != 0) throw std::invalid_argument("Grid: n must be a power of two >= 64");
        if (!(L > 0.0)) throw std::invalid_argument("Grid: L must be positive");
    }

    double h() const { return 2.0 * L / n; }
    double cell_volume() const { return std::pow(h(), dim); }
    std::size_t size() const { return dim == 1 ? std::size_t(n) : std::size_t(n) * n; }
    double coord(int i) const { return -L + i * h(); }
    int origin_index() const { return n / 2; }

    /// Flat index of the origin.
    std::size_t origin() const { return dim == 1 ? std::size_t(n / 2) : std::size_t(n / 2) * n + n / 2; }

    std::array<int, 2> unflatten(std::size_t k) const
    {
        if (dim == 1) return {static_cast<int>(k), 0};
        return {static_cast<int>(k / n), static_cast<int>(k % n)};
    }
    std::size_t flatten(int i0, int i1 = 0) const { return dim == 1 ? std::size_t(i0) : std::size_t(i0) * n + i1; }

    /// Euclidean norm of the node position.
    double radius(std::size_t k) const
    {
        const auto [i0, i1] = unflatten(k);
        const double x0 = coord(i0);
        if (dim == 1) return std::abs(x0);
        return std::hypot(x0, coord(i1));
    }

    /// Size of the half-complex spectrum used by r2c transforms.
    std::size_t spectrum_size() const { return dim == 1 ? std::size_t(n / 2 + 1) : std::size_t(n) * (n / 2 + 1); }

    bool operator==(const Grid& o) const { return dim == o.dim && n == o.n && L == o.L; }

    nlohmann::json to_json() const { return {{"dim", dim}, {"n", n}, {"L", L}}; }
};

/// Real samples on a grid, row-major for d = 2.
struct Field {
    Grid grid;
    std::vector<double> values;
    double time_label = 0.0;

    Field() = default;
    Field(const Grid& g, double t = 0.0) : grid(g), values(g.size(), 0.0), time_label(t) {}
    Field(const Grid& g, std::vector<double> v, double t) : grid(g), values(std::move(v)), time_label(t)
    {
        if (values.size() != grid.size()) throw GridMismatch("Field: value count does not match grid");
    }

    double mass() const
    {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.cell_volume();
    }
    double max() const { return *std::max_element(values.begin(), values.end()); }
    double min() const { return *std::min_element(values.begin(), values.end()); }
    double at_origin() const { return values[grid.origin()]; }
};

inline double norm_linf(const Field& f)
{
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

inline double norm_lp(const Field& f, double p)
{
    if (std::isinf(p)) return norm_linf(f);
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

/// Field sampled from a function of the node coordinates.
inline Field sample(const Grid& g, const std::function<double(double, double)>& f, double t = 0.0)
{
    Field out(g, t);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto [i0, i1] = g.unflatten(k);
        out.values[k] = g.dim == 1 ? f(g.coord(i0), 0.0) : f(g.coord(i0), g.coord(i1));
    }
    return out;
}

namespace detail {

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace detail

/// FFTW r2c / c2r pair for one grid. Plan creation is serialised; a workspace
/// must not be shared between threads.
class FftWorkspace {
public:
    explicit FftWorkspace(const Grid& g) : grid_(g)
    {
        real_ = fftw_alloc_real(g.size());
        spec_ = fftw_alloc_complex(g.spectrum_size());
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        if (g.dim == 1) {
            fwd_ = fftw_plan_dft_r2c_1d(g.n, real_, spec_, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_c2r_1d(g.n, spec_, real_, FFTW_ESTIMATE);
        } else {
            fwd_ = fftw_plan_dft_r2c_2d(g.n, g.n, real_, spec_, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_c2r_2d(g.n, g.n, spec_, real_, FFTW_ESTIMATE);
        }
    }
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;
    ~FftWorkspace()
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    const Grid& grid() const { return grid_; }
    double* real() { return real_; }
    std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }

    void forward() { fftw_execute(fwd_); }
    // c2r destroys its input; callers refill the spectrum each time
    void backward() { fftw_execute(bwd_); }

private:
    Grid grid_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Angular frequency vectors of the half spectrum, with the sign (-1)^(m0+m1)
/// that moves the synthesis origin from index 0 to the grid centre.
struct ModeTable {
    Grid grid;
    std::vector<std::array<double, 2>> xi;
    std::vector<double> phase;

    explicit ModeTable(const Grid& g) : grid(g)
    {
        const double dxi = std::numbers::pi / g.L;
        auto wrap = [&](int m) { return m <= g.n / 2 ? m : m - g.n; };
        const int nh = g.n / 2 + 1;
        xi.resize(g.spectrum_size());
        phase.resize(g.spectrum_size());
        if (g.dim == 1) {
            for (int m = 0; m < nh; ++m) {
                xi[m] = {dxi * wrap(m), 0.0};
                phase[m] = (m % 2 == 0) ? 1.0 : -1.0;
            }
        } else {
            for (int m0 = 0; m0 < g.n; ++m0) {
                for (int m1 = 0; m1 < nh; ++m1) {
                    const std::size_t k = std::size_t(m0) * nh + m1;
                    xi[k] = {dxi * wrap(m0), dxi * wrap(m1)};
                    phase[k] = ((m0 + m1) % 2 == 0) ? 1.0 : -1.0;
                }
            }
        }
    }
    std::size_t size() const { return xi.size(); }
};

/// Samples of the periodic function whose Fourier coefficients are the
/// continuous transform values `spectrum[k]` at the dual-grid frequencies.
inline Field synthesize(const Grid& g, const std::vector<double>& spectrum, double t = 0.0)
{
    if (spectrum.size() != g.spectrum_size()) throw GridMismatch("synthesize: spectrum size mismatch");
    ModeTable modes(g);
    FftWorkspace ws(g);
    auto* s = ws.spectrum();
    for (std::size_t k = 0; k < spectrum.size(); ++k) s[k] = spectrum[k] * modes.phase[k];
    ws.backward();
    Field out(g, t);
    const double scale = 1.0 / std::pow(2.0 * g.L, g.dim);
    for (std::size_t k = 0; k < g.size(); ++k) out.values[k] = ws.real()[k] * scale;
    return out;
}

/// Evaluate `symbol(xi)` on the half spectrum, optionally folding `images`
/// aliased copies per axis (xi + 2 pi k / h, |k| <= images) into each mode.
inline std::vector<double> spectrum_of(const Grid& g, const std::function<double(const std::array<double, 2>&)>& symbol,
                                       int images = 0)
{
    ModeTable modes(g);
    std::vector<double> out(modes.size());
    const double period = 2.0 * std::numbers::pi / g.h();
    for (std::size_t k = 0; k < modes.size(); ++k) {
        double s = 0.0;
        const auto& x = modes.xi[k];
        for (int a = -images; a <= images; ++a) {
            if (g.dim == 1) {
                s += symbol({x[0] + a * period, 0.0});
                continue;
            }
            for (int b = -images; b <= images; ++b) s += symbol({x[0] + a * period, x[1] + b * period});
        }
        out[k] = s;
    }
    return out;
}

/// Circular convolution with a Fourier multiplier given on the half spectrum
/// (continuous-transform normalisation).
inline Field apply_multiplier(const Field& f, const std::vector<double>& multiplier)
{
    const Grid& g = f.grid;
    if (multiplier.size() != g.spectrum_size()) throw GridMismatch("apply_multiplier: spectrum size mismatch");
    FftWorkspace ws(g);
    std::copy(f.values.begin(), f.values.end(), ws.real());
    ws.forward();
    auto* s = ws.spectrum();
    for (std::size_t k = 0; k < multiplier.size(); ++k) s[k] *= multiplier[k];
    ws.backward();
    Field out(g, f.time_label);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) out.values[k] = ws.real()[k] * scale;
    return out;
}

/// Discrete (h^d-weighted) circular convolution k * f, the kernel being
/// centred at the grid origin.
inline Field convolve(const Field& k, const Field& f)
{
    if (!(k.grid == f.grid)) throw GridMismatch("convolve: fields live on different grids");
    const Grid& g = f.grid;
    ModeTable modes(g);
    std::vector<std::complex<double>> kspec(g.spectrum_size());
    {
        FftWorkspace ws(g);
        std::copy(k.values.begin(), k.values.end(), ws.real());
        ws.forward();
        const double hv = g.cell_volume();
        for (std::size_t m = 0; m < kspec.size(); ++m) kspec[m] = ws.spectrum()[m] * (hv * modes.phase[m]);
    }
    FftWorkspace ws(g);
    std::copy(f.values.begin(), f.values.end(), ws.real());
    ws.forward();
    for (std::size_t m = 0; m < kspec.size(); ++m) ws.spectrum()[m] *= kspec[m];
    ws.backward();
    Field out(g, f.time_label);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = ws.real()[i] * scale;
    return out;
}

/// Discrete delta: 1/h^d at the origin.
inline Field discrete_delta(const Grid& g)
{
    Field d(g);
    d.values[g.origin()] = 1.0 / g.cell_volume();
    return d;
}

/// Reflection x -> -x on the grid (index i -> n - i mod n about the centre).
inline Field reflect(const Field& f)
{
    const Grid& g = f.grid;
    Field out(g, f.time_label);
    auto r = [&](int i) { return (g.n - i) % g.n; };
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto [i0, i1] = g.unflatten(k);
        out.values[k] = f.values[g.dim == 1 ? g.flatten(r(i0)) : g.flatten(r(i0), r(i1))];
    }
    return out;
}

/// Cyclic shift by whole nodes along each axis.
inline Field shift(const Field& f, int s0, int s1 = 0)
{
    const Grid& g = f.grid;
    Field out(g, f.time_label);
    auto w = [&](int i) { return ((i % g.n) + g.n) % g.n; };
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto [i0, i1] = g.unflatten(k);
        const std::size_t src = g.dim == 1 ? g.flatten(w(i0 - s0)) : g.flatten(w(i0 - s0), w(i1 - s1));
        out.values[k] = f.values[src];
    }
    return out;
}

}  // namespace fdlab
