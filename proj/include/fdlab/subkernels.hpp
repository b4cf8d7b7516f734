#pragma once

// Fundamental solutions (Z, Y) of the time-fractional problem, built two ways:
//   * subordination of the Green function G against the stable mixing
//     density (verification path), and
//   * the Fourier side, Z^ = E_{a,1}(-t^a psi), Y^ = t^(a-1) E_{a,a}(-t^a psi)
//     (production path, one Mittag-Leffler evaluation per mode).

#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/grid.hpp"
#include "fdlab/io.hpp"
#include "fdlab/ml_table.hpp"
#include "fdlab/quadrature.hpp"
#include "fdlab/spectral.hpp"
#include "fdlab/specfun.hpp"

namespace fdlab {

enum class KernelKind { Z, Y };

inline const char* to_string(KernelKind k) { return k == KernelKind::Z ? "Z" : "Y"; }

struct KernelOptions {
    /// Aliased spectral copies folded into each mode (per axis).
    int alias_images = 0;
    /// Gauss-Legendre panels on log s in [-30, 30] for the subordination path.
    int subordination_panels = 120;
};

/// Shared, lazily built tables of z -> E_{a,b}(-z).
inline std::shared_ptr<const MittagLefflerTable> ml_table(double a, double b)
{
    static std::mutex mu;
    static std::map<std::pair<double, double>, std::shared_ptr<const MittagLefflerTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{a, b}];
    if (!slot) slot = std::make_shared<const MittagLefflerTable>(a, b);
    return slot;
}

/// Length scale t^(alpha/beta) of Z(t, .) and Y(t, .).
inline double kernel_scale(double alpha, double beta, double t) { return std::pow(t, alpha / beta); }

namespace detail {

inline void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("kernel: alpha must lie in (0, 1)");
}

// A kernel whose scale is below one cell is a grid delta, above L it is flat
// on the torus; neither is a usable sample.
inline void check_kernel_resolution(const StableSymbol& sym, double alpha, double t, const Grid& grid)
{
    if (!(t > 0.0)) throw std::domain_error("kernel: t must be positive");
    if (sym.dim() != grid.dim) throw GridMismatch("kernel: symbol and grid dimensions differ");
    const double s = kernel_scale(alpha, sym.beta(), t);
    if (s < grid.h() || s > grid.L) {
        std::ostringstream os;
        os << "kernel scale t^(alpha/beta) = " << s << " outside [h, L] = [" << grid.h() << ", " << grid.L << "]";
        throw ResolutionError(os.str());
    }
}

inline double psi_at(const StableSymbol& sym, const std::array<double, 2>& xi, int dim)
{
    return sym(std::span<const double>(xi.data(), dim));
}

// Nodes u_q = log s_q with weights w_q M(s_q) s_q du (mass) and the same
// times alpha s_q (for Y); cached per (alpha, panels).
struct SubordinationRule {
    std::vector<double> s;
    std::vector<double> z_weight;
    std::vector<double> y_weight;
};

inline std::shared_ptr<const SubordinationRule> subordination_rule(double alpha, int panels)
{
    static std::mutex mu;
    static std::map<std::pair<double, int>, std::shared_ptr<const SubordinationRule>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find({alpha, panels}); it != cache.end()) return it->second;
    }
    auto rule = std::make_shared<SubordinationRule>();
    const StableIndex idx(alpha);
    const auto gl = quad::gauss_legendre_panels(-30.0, 30.0, panels);
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
        const double s = std::exp(gl.nodes[q]);
        const double w = gl.weights[q] * subordination_weight(idx, s) * s;
        if (w == 0.0) continue;
        rule->s.push_back(s);
        rule->z_weight.push_back(w);
        rule->y_weight.push_back(w * alpha * s);
    }
    std::lock_guard<std::mutex> lock(mu);
    cache[{alpha, panels}] = rule;
    return rule;
}

}  // namespace detail

/// psi at every half-spectrum mode and each folded alias image; independent
/// of time, so kernel ladders evaluate it once.
struct SymbolSamples {
    Grid grid;
    int images = 0;
    std::size_t per_mode = 1;
    std::vector<double> psi;
};

inline SymbolSamples symbol_samples(const StableSymbol& sym, const Grid& grid, int images = 0)
{
    if (images < 0) throw std::invalid_argument("symbol_samples: images must be non-negative");
    SymbolSamples s{grid, images, 1, {}};
    const std::size_t w = 2 * std::size_t(images) + 1;
    s.per_mode = grid.dim == 1 ? w : w * w;
    ModeTable modes(grid);
    const double period = 2.0 * std::numbers::pi / grid.h();
    s.psi.reserve(modes.size() * s.per_mode);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const auto& x = modes.xi[k];
        for (int a = -images; a <= images; ++a) {
            if (grid.dim == 1) {
                const double v = x[0] + a * period;
                s.psi.push_back(sym(std::span<const double>(&v, 1)));
                continue;
            }
            for (int b = -images; b <= images; ++b) {
                const std::array<double, 2> v{x[0] + a * period, x[1] + b * period};
                s.psi.push_back(sym(std::span<const double>(v.data(), 2)));
            }
        }
    }
    return s;
}

namespace detail {

template <class F>
std::vector<double> fold(const SymbolSamples& s, F&& f)
{
    const std::size_t m = s.psi.size() / s.per_mode;
    std::vector<double> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < s.per_mode; ++j) acc += f(s.psi[k * s.per_mode + j]);
        out[k] = acc;
    }
    return out;
}

}  // namespace detail

/// Fourier multiplier of Z(t, .): E_{a,1}(-t^a psi).
inline std::vector<double> z_multiplier(const SymbolSamples& samples, double alpha, double t)
{
    const auto e = ml_table(alpha, 1.0);
    const double ta = std::pow(t, alpha);
    return detail::fold(samples, [&](double p) { return (*e)(ta * p); });
}

/// Fourier multiplier of Y(t, .): t^(a-1) E_{a,a}(-t^a psi).
inline std::vector<double> y_multiplier(const SymbolSamples& samples, double alpha, double t)
{
    const auto e = ml_table(alpha, alpha);
    const double ta = std::pow(t, alpha);
    const double pre = std::pow(t, alpha - 1.0);
    return detail::fold(samples, [&](double p) { return pre * (*e)(ta * p); });
}

inline std::vector<double> z_multiplier(const StableSymbol& sym, double alpha, double t, const Grid& grid,
                                        int images = 0)
{
    return z_multiplier(symbol_samples(sym, grid, images), alpha, t);
}

inline std::vector<double> y_multiplier(const StableSymbol& sym, double alpha, double t, const Grid& grid,
                                        int images = 0)
{
    return y_multiplier(symbol_samples(sym, grid, images), alpha, t);
}

inline Field z_kernel_fourier(const StableSymbol& sym, double alpha, double t, const Grid& grid,
                              const KernelOptions& opt = {})
{
    detail::check_alpha(alpha);
    detail::check_kernel_resolution(sym, alpha, t, grid);
    return synthesize(grid, z_multiplier(sym, alpha, t, grid, opt.alias_images), t);
}

inline Field y_kernel_fourier(const StableSymbol& sym, double alpha, double t, const Grid& grid,
                              const KernelOptions& opt = {})
{
    detail::check_alpha(alpha);
    detail::check_kernel_resolution(sym, alpha, t, grid);
    return synthesize(grid, y_multiplier(sym, alpha, t, grid, opt.alias_images), t);
}

namespace detail {

// Mixture of on-grid Green functions G(t^a s, .) against the given weights.
// The mixture is accumulated mode by mode (synthesis is linear), which equals
// summing the synthesised G fields.
inline Field subordinate(const StableSymbol& sym, double alpha, double t, const Grid& grid, const KernelOptions& opt,
                         KernelKind kind)
{
    check_alpha(alpha);
    check_kernel_resolution(sym, alpha, t, grid);
    const auto rule = subordination_rule(alpha, opt.subordination_panels);
    const auto& w = kind == KernelKind::Z ? rule->z_weight : rule->y_weight;
    const double ta = std::pow(t, alpha);
    const double pre = kind == KernelKind::Z ? 1.0 : std::pow(t, alpha - 1.0);
    auto spectrum = spectrum_of(
        grid,
        [&](const std::array<double, 2>& xi) {
            const double lam = ta * psi_at(sym, xi, grid.dim);
            double sum = 0.0;
            for (std::size_t q = 0; q < rule->s.size(); ++q) {
                const double e = lam * rule->s[q];
                if (e > 745.0) break;  // s is increasing
                sum += w[q] * std::exp(-e);
            }
            return pre * sum;
        },
        opt.alias_images);
    return synthesize(grid, spectrum, t);
}

}  // namespace detail

/// Z(t, x) = int_0^inf G(t^a s, x) M_a(s) ds.
inline Field z_kernel(const StableSymbol& sym, double alpha, double t, const Grid& grid, const KernelOptions& opt = {})
{
    return detail::subordinate(sym, alpha, t, grid, opt, KernelKind::Z);
}

/// Y(t, x) = t^(a-1) int_0^inf G(t^a s, x) s^(-1/a) w_a(s^(-1/a)) ds.
inline Field y_kernel(const StableSymbol& sym, double alpha, double t, const Grid& grid, const KernelOptions& opt = {})
{
    return detail::subordinate(sym, alpha, t, grid, opt, KernelKind::Y);
}

/// Max |f(x) - f(-x)| relative to max |f|.
inline double evenness_residual(const Field& f)
{
    const Field r = reflect(f);
    double d = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) d = std::max(d, std::abs(f.values[k] - r.values[k]));
    const double m = norm_linf(f);
    return m > 0.0 ? d / m : d;
}

/// Z and Y sampled on a grid along a time ladder; immutable once built.
class KernelTable {
public:
    static KernelTable build(const StableSymbol& sym, double alpha, const Grid& grid, std::vector<double> times,
                             const KernelOptions& opt = {}, unsigned jobs = 0)
    {
        detail::check_alpha(alpha);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] > 0.0) || (i > 0 && !(times[i] > times[i - 1])))
                throw std::invalid_argument("KernelTable: times must be positive and strictly increasing");
        }
        KernelTable tab(sym, alpha, grid, std::move(times), opt);
        const std::size_t m = tab.times_.size();
        tab.z_.resize(m);
        tab.y_.resize(m);
        // warm the shared tables before fanning out
        ml_table(alpha, 1.0);
        ml_table(alpha, alpha);
        if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
        std::vector<std::future<void>> pending;
        std::size_t next = 0;
        const SymbolSamples samples = symbol_samples(tab.sym_, tab.grid_, opt.alias_images);
        auto work = [&tab, &samples](std::size_t i) {
            const double t = tab.times_[i];
            detail::check_kernel_resolution(tab.sym_, tab.alpha_, t, tab.grid_);
            tab.z_[i] = synthesize(tab.grid_, z_multiplier(samples, tab.alpha_, t), t);
            tab.y_[i] = synthesize(tab.grid_, y_multiplier(samples, tab.alpha_, t), t);
        };
        while (next < m) {
            pending.clear();
            for (unsigned j = 0; j < jobs && next < m; ++j, ++next) pending.push_back(std::async(std::launch::async, work, next));
            for (auto& p : pending) p.get();
        }
        return tab;
    }

    const StableSymbol& symbol() const { return sym_; }
    double alpha() const { return alpha_; }
    double beta() const { return sym_.beta(); }
    const Grid& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    const KernelOptions& options() const { return opt_; }
    std::size_t size() const { return times_.size(); }

    const Field& slice(KernelKind k, std::size_t i) const { return k == KernelKind::Z ? z_.at(i) : y_.at(i); }
    const Field& z(std::size_t i) const { return z_.at(i); }
    const Field& y(std::size_t i) const { return y_.at(i); }

    /// Relative mass errors and evenness per slice.
    nlohmann::json invariant_report() const
    {
        nlohmann::json rows = nlohmann::json::array();
        bool ok = true;
        for (std::size_t i = 0; i < times_.size(); ++i) {
            const double t = times_[i];
            const double mz = z_[i].mass();
            const double my = y_[i].mass();
            const double ga = g_kernel(alpha_, t);
            const double ez = std::abs(mz - 1.0);
            const double ey = std::abs(my - ga) / ga;
            const double even = std::max(evenness_residual(z_[i]), evenness_residual(y_[i]));
            const bool pass = ez <= 2e-3 && ey <= 2e-3 && even <= 1e-12;
            ok = ok && pass;
            rows.push_back({{"t", t}, {"mass_z", mz}, {"mass_y", my}, {"g_alpha", ga}, {"rel_err_z", ez},
                            {"rel_err_y", ey}, {"evenness", even}, {"pass", pass}});
        }
        return {{"slices", rows}, {"pass", ok}};
    }

    nlohmann::json manifest() const
    {
        return {{"alpha", alpha_}, {"symbol", sym_.descriptor()}, {"grid", grid_.to_json()}, {"times", times_},
                {"alias_images", opt_.alias_images}};
    }

    /// Writes manifest.json plus z_<i>.bin / y_<i>.bin in the binary field format.
    void export_to(const std::filesystem::path& dir) const
    {
        std::filesystem::create_directories(dir);
        auto man = manifest();
        nlohmann::json files = nlohmann::json::array();
        for (std::size_t i = 0; i < times_.size(); ++i) {
            const std::string zn = "z_" + std::to_string(i) + ".bin";
            const std::string yn = "y_" + std::to_string(i) + ".bin";
            io::write_field_binary(z_[i], dir / zn);
            io::write_field_binary(y_[i], dir / yn);
            files.push_back({{"t", times_[i]}, {"z", zn}, {"y", yn}});
        }
        man["files"] = files;
        io::write_json(man, dir / "manifest.json");
    }

    /// Reads a table written by export_to. The symbol is passed in (the
    /// manifest only carries its descriptor) and must match it.
    static KernelTable import_from(const std::filesystem::path& dir, const StableSymbol& sym)
    {
        const auto man = io::read_json(dir / "manifest.json");
        if (man.at("symbol") != sym.descriptor()) throw std::invalid_argument("KernelTable: symbol does not match manifest");
        const auto& gj = man.at("grid");
        Grid grid(gj.at("dim").get<int>(), gj.at("n").get<int>(), gj.at("L").get<double>());
        KernelOptions opt;
        opt.alias_images = man.value("alias_images", 0);
        KernelTable tab(sym, man.at("alpha").get<double>(), grid, man.at("times").get<std::vector<double>>(), opt);
        for (const auto& f : man.at("files")) {
            tab.z_.push_back(io::read_field_binary(dir / f.at("z").get<std::string>()));
            tab.y_.push_back(io::read_field_binary(dir / f.at("y").get<std::string>()));
            if (!(tab.z_.back().grid == grid) || !(tab.y_.back().grid == grid))
                throw GridMismatch("KernelTable: slice grid differs from manifest");
        }
        if (tab.z_.size() != tab.times_.size()) throw std::runtime_error("KernelTable: slice count mismatch");
        return tab;
    }

private:
    KernelTable(StableSymbol sym, double alpha, Grid grid, std::vector<double> times, KernelOptions opt)
        : sym_(std::move(sym)), alpha_(alpha), grid_(grid), times_(std::move(times)), opt_(opt)
    {
    }

    StableSymbol sym_;
    double alpha_;
    Grid grid_;
    std::vector<double> times_;
    KernelOptions opt_;
    std::vector<Field> z_;
    std::vector<Field> y_;
};

/// Geometric ladder t0 * ratio^k, k = 0..count-1.
inline std::vector<double> geometric_ladder(double t0, double ratio, int count)
{
    std::vector<double> t(count);
    for (int k = 0; k < count; ++k) t[k] = t0 * std::pow(ratio, k);
    return t;
}

struct YZProbeResult {
    std::size_t node;
    double radius;
    double t;
    double omega;
    double y_value;
    double fd_value;
    double residual;
};

struct YZReport {
    std::vector<YZProbeResult> rows;
    double max_residual = 0.0;
    bool pass = false;

    nlohmann::json to_json() const
    {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& p : rows)
            r.push_back({{"node", p.node}, {"radius", p.radius}, {"t", p.t}, {"omega", p.omega}, {"y", p.y_value},
                         {"d_dt_g_conv_z", p.fd_value}, {"residual", p.residual}});
        return {{"rows", r}, {"max_residual", max_residual}, {"pass", pass}};
    }
};

namespace detail {

// Product-integration weights for int_0^1 g_a(1 - s) f(s) ds with f linear
// between the nodes.
inline std::vector<double> product_trapezoid_weights(double alpha, const std::vector<double>& s)
{
    const std::size_t m = s.size();
    std::vector<double> w(m, 0.0);
    // int_{s_j}^{s_{j+1}} g_a(1-s) (s_{j+1}-s)/h ds  and  (s-s_j)/h
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double a = 1.0 - s[j + 1];  // tau range [a, b], tau = 1 - s
        const double b = 1.0 - s[j];
        const double h = s[j + 1] - s[j];
        // int g_a(tau) dtau = g_{a+1}; int tau g_a(tau) dtau = a g_{a+2}
        const double i0 = g_kernel_any(alpha + 1.0, b) - g_kernel_any(alpha + 1.0, a);
        const double i1 = alpha * (g_kernel_any(alpha + 2.0, b) - g_kernel_any(alpha + 2.0, a));
        // s_{j+1} - s = tau - a ; s - s_j = b - tau
        w[j] += (i1 - a * i0) / h;
        w[j + 1] += (b * i0 - i1) / h;
    }
    return w;
}

}  // namespace detail

/// Checks Y(t, x) = d/dt (g_a * Z(., x))(t) at the given probe nodes and every
/// interior ladder time. The time convolution uses product integration over
/// Z(s, x) synthesised at a graded set of s in (0, t]; the derivative is a
/// central difference with relative step 1e-2.
inline YZReport verify_yz_relation(const KernelTable& table, const std::vector<std::size_t>& probes,
                                   int time_nodes = 400)
{
    const auto& times = table.times();
    if (times.size() < 3) throw std::invalid_argument("verify_yz_relation: need at least three ladder times");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] / times[i - 1] > 1.2 + 1e-12)
            throw std::invalid_argument("verify_yz_relation: ladder ratio exceeds 1.2");
    }
    const Grid& grid = table.grid();
    const double alpha = table.alpha();
    const double beta = table.beta();

    std::vector<std::size_t> usable;
    for (auto p : probes)
        if (grid.radius(p) >= 4.0 * grid.h()) usable.push_back(p);

    // graded nodes resolving the s^alpha onset of Z(s, x) at s = 0
    const double grading = std::max(1.0, 2.0 / alpha);
    std::vector<double> sigma(time_nodes + 1);
    for (int j = 0; j <= time_nodes; ++j) sigma[j] = std::pow(double(j) / time_nodes, grading);
    const auto weights = detail::product_trapezoid_weights(alpha, sigma);

    const SymbolSamples samples = symbol_samples(table.symbol(), grid, table.options().alias_images);
    // (g_a * Z(., x))(t) = t^a int_0^1 g_a(1-s) Z(t s, x) ds
    auto conv = [&](double t) {
        std::vector<double> acc(usable.size(), 0.0);
        for (int j = 1; j <= time_nodes; ++j) {
            const Field z = synthesize(grid, z_multiplier(samples, alpha, t * sigma[j]));
            for (std::size_t p = 0; p < usable.size(); ++p) acc[p] += weights[j] * z.values[usable[p]];
        }
        for (auto& v : acc) v *= std::pow(t, alpha);
        return acc;
    };

    YZReport rep;
    constexpr double eps = 1e-2;
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        const double t = times[i];
        const auto up = conv(t * (1.0 + eps));
        const auto dn = conv(t * (1.0 - eps));
        const Field& y = table.y(i);
        for (std::size_t p = 0; p < usable.size(); ++p) {
            const double fd = (up[p] - dn[p]) / (2.0 * eps * t);
            const double yv = y.values[usable[p]];
            const double r = grid.radius(usable[p]);
            const double res = std::abs(yv - fd) / std::abs(yv);
            rep.rows.push_back({usable[p], r, t, std::pow(r, beta) * std::pow(t, -alpha), yv, fd, res});
            rep.max_residual = std::max(rep.max_residual, res);
        }
    }
    rep.pass = !rep.rows.empty() && rep.max_residual <= 2e-2;
    return rep;
}

/// Grid nodes on the positive first axis whose similarity variable
/// r^beta t^-alpha is closest to each requested value.
inline std::vector<std::size_t> omega_probes(const Grid& grid, double alpha, double beta, double t,
                                             const std::vector<double>& omegas)
{
    std::vector<std::size_t> out;
    for (double om : omegas) {
        const double r = std::pow(om * std::pow(t, alpha), 1.0 / beta);
        const int i = std::min(grid.n - 1, grid.origin_index() + static_cast<int>(std::lround(r / grid.h())));
        out.push_back(grid.flatten(i, grid.dim == 2 ? grid.origin_index() : 0));
    }
    return out;
}

}  // namespace fdlab
