#pragma once

// Mild-equation solver
//   u(t) = Z(t) * u0 + int_0^t Y(t - s) * F(u(s)) ds
// by product integration in time: per Fourier mode the nonlinearity is
// interpolated linearly between nodes and integrated exactly against the
// time profile of Y-hat, whose first two antiderivatives are
//   K1(tau) = tau^a E_{a,a+1}(-tau^a psi),  K2(tau) = tau^(a+1) E_{a,a+2}(-tau^a psi).
// The implicit node value is found by Picard iteration; a step whose
// iteration stalls is halved.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/grid.hpp"
#include "fdlab/spectral.hpp"
#include "fdlab/specfun.hpp"
#include "fdlab/subkernels.hpp"

namespace fdlab {

enum class NonlinearityKind { Power, Truncated, None };

inline const char* to_string(NonlinearityKind k)
{
    switch (k) {
    case NonlinearityKind::Power: return "power";
    case NonlinearityKind::Truncated: return "truncated";
    case NonlinearityKind::None: return "none";
    }
    return "?";
}

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, nlohmann::json diagnostics)
        : std::runtime_error(what), diagnostics_(std::move(diagnostics))
    {
    }
    const nlohmann::json& diagnostics() const { return diagnostics_; }

private:
    nlohmann::json diagnostics_;
};

struct SolverConfig {
    double alpha = 0.5;
    double beta = 1.0;
    double gamma = 2.0;
    SpectralMeasure measure = SpectralMeasure::symmetric_atoms();
    Grid grid{1, 512, 32.0};
    double horizon = 1.0;
    int steps = 400;
    /// Mesh t_k = T (k/N)^r; r <= 0 selects max(1, 1/alpha).
    double grading = 0.0;
    double picard_tol = 1e-10;
    int picard_max_iter = 200;
    NonlinearityKind nonlinearity = NonlinearityKind::Power;
    /// Level n of the truncated nonlinearity g_n.
    int truncation = 0;
    /// Guard threshold as a multiple of the initial sup norm.
    double guard_factor = 1e3;
    /// Exponent of the reported L_p norm.
    double norm_p = 2.0;
    int max_halvings = 48;
    int jobs = 1;

    double grading_exponent() const { return grading > 0.0 ? grading : std::max(1.0, 1.0 / alpha); }

    std::vector<double> mesh() const
    {
        std::vector<double> t(steps + 1);
        const double r = grading_exponent();
        for (int k = 0; k <= steps; ++k) t[k] = horizon * std::pow(double(k) / steps, r);
        t[steps] = horizon;
        return t;
    }

    void validate() const
    {
        auto bad = [](const std::string& m) { throw std::invalid_argument("SolverConfig: " + m); };
        if (!(alpha > 0.0 && alpha < 1.0)) bad("alpha must lie in (0, 1)");
        if (!(beta > 0.0 && beta < 2.0)) bad("beta must lie in (0, 2)");
        if (nonlinearity != NonlinearityKind::None && !(gamma > 1.0)) bad("gamma must exceed 1");
        if (measure.dim() != grid.dim) bad("measure and grid dimensions differ");
        if (!(horizon > 0.0)) bad("horizon must be positive");
        if (steps < 1) bad("steps must be >= 1");
        if (!(picard_tol > 0.0)) bad("picard tolerance must be positive");
        if (picard_max_iter < 1) bad("picard_max_iter must be >= 1");
        if (nonlinearity == NonlinearityKind::Truncated && truncation < 1) bad("truncation level n must be >= 1");
        if (!(guard_factor > 1.0)) bad("guard factor must exceed 1");
        if (!(norm_p >= 1.0)) bad("norm exponent p must be >= 1");
        if (max_halvings < 0) bad("max_halvings must be >= 0");
        if (jobs < 1) bad("jobs must be >= 1");
    }

    nlohmann::json to_json() const
    {
        return {{"alpha", alpha},
                {"beta", beta},
                {"gamma", gamma},
                {"measure", measure.descriptor()},
                {"grid", grid.to_json()},
                {"horizon", horizon},
                {"steps", steps},
                {"grading", grading_exponent()},
                {"picard_tol", picard_tol},
                {"picard_max_iter", picard_max_iter},
                {"nonlinearity", to_string(nonlinearity)},
                {"truncation", truncation},
                {"guard_factor", guard_factor},
                {"norm_p", norm_p},
                {"max_halvings", max_halvings}};
    }
};

// ---------------------------------------------------------------------------
// Parameter regimes

struct ParamReport {
    int d = 1;
    double kappa = 1.0;
    double critical = 0.0;
    bool mild_admissible = false;  // 1 < p < inf
    bool alpha_is_half_beta = false;
    std::string gamma_position;  // "subcritical" | "critical" | "supercritical"
    bool blowup_hypotheses = false;
    double p_lower = 0.0;  // global window: p_lower < p < inf
    bool p_in_window = false;
    double p_prime_lower = 0.0;
    double p_prime_upper = 0.0;
    bool p_prime_closed_lower = false;  // the lower end is the single admissible value 1
    bool p_prime_window_nonempty = false;
    std::optional<double> p_prime;
    bool p_prime_in_window = false;
    bool global_window = false;
    std::vector<std::string> notes;

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"d", d},
                         {"kappa", kappa},
                         {"critical_exponent", critical},
                         {"mild_admissible", mild_admissible},
                         {"alpha_is_half_beta", alpha_is_half_beta},
                         {"gamma_position", gamma_position},
                         {"blowup_hypotheses", blowup_hypotheses},
                         {"p_lower", p_lower},
                         {"p_in_window", p_in_window},
                         {"p_prime_window", {p_prime_lower, p_prime_upper}},
                         {"p_prime_window_nonempty", p_prime_window_nonempty},
                         {"p_prime_in_window", p_prime_in_window},
                         {"global_window", global_window},
                         {"notes", notes}};
        j["p_prime"] = p_prime ? nlohmann::json(*p_prime) : nlohmann::json(nullptr);
        return j;
    }
};

inline ParamReport validate_params(const SolverConfig& cfg, double p, std::optional<double> p_prime = std::nullopt)
{
    ParamReport r;
    const double d = cfg.grid.dim;
    const double beta = cfg.beta;
    const double gamma = cfg.gamma;
    r.d = cfg.grid.dim;
    r.kappa = d > beta ? d / beta : 1.0;
    r.critical = 1.0 + beta / d;
    r.mild_admissible = p > 1.0 && std::isfinite(p);
    r.alpha_is_half_beta = std::abs(cfg.alpha - 0.5 * beta) <= 1e-12;
    const double gap = gamma - r.critical;
    r.gamma_position = std::abs(gap) <= 1e-12 ? "critical" : (gap < 0.0 ? "subcritical" : "supercritical");
    r.blowup_hypotheses = r.alpha_is_half_beta && gamma > 1.0 && gap <= 1e-12;
    r.p_lower = std::max({1.0, r.kappa, d * (gamma - 1.0) / beta});
    r.p_in_window = p > r.p_lower && std::isfinite(p);
    r.p_prime_upper = (d / beta) * (gamma - 1.0);
    if (d < beta) {
        r.p_prime_lower = 1.0;
        r.p_prime_closed_lower = true;
        r.p_prime_window_nonempty = 1.0 < r.p_prime_upper;
    } else {
        r.p_prime_lower = d / beta;
        r.p_prime_window_nonempty = r.p_prime_lower < r.p_prime_upper;
        if (!r.p_prime_window_nonempty)
            r.notes.push_back("d >= beta: the p' window (d/beta, (d/beta)(gamma-1)) is empty for these parameters");
        else if (d > beta)
            r.notes.push_back("d > beta: the p' window need not be nonempty in general");
    }
    r.p_prime = p_prime;
    if (p_prime) {
        const double q = *p_prime;
        r.p_prime_in_window =
            r.p_prime_closed_lower ? (q == 1.0 && r.p_prime_window_nonempty) : (q > r.p_prime_lower && q < r.p_prime_upper);
    }
    r.global_window = gap > 1e-12 && r.p_in_window && r.p_prime_window_nonempty && (!p_prime || r.p_prime_in_window);
    if (!r.mild_admissible) r.notes.push_back("mild solutions need 1 < p < inf");
    if (!r.alpha_is_half_beta) r.notes.push_back("blow-up theorem assumes alpha = beta/2");
    return r;
}

// ---------------------------------------------------------------------------
// Nonlinearities

/// g_n: 0 below 0, r^gamma on [0, n], a_n - b_n e^(-r) above n, C^1 at r = n.
inline double truncated_nonlinearity(int n, double gamma, double r)
{
    if (n < 1) throw std::domain_error("truncated_nonlinearity: n must be >= 1");
    if (!(r > 0.0)) return 0.0;
    const double nn = n;
    if (r <= nn) return std::pow(r, gamma);
    const double slope = gamma * std::pow(nn, gamma - 1.0);
    const double a_n = std::pow(nn, gamma) + slope;
    return a_n - slope * std::exp(-(r - nn));
}

inline double truncated_lipschitz(int n, double gamma) { return gamma * std::pow(double(n), gamma - 1.0); }

inline double power_nonlinearity(double gamma, double r) { return std::copysign(std::pow(std::abs(r), gamma), r); }

/// ||u_n(t)||_inf <= (||u0||_inf + 1/n) E_{alpha,1}(gamma n^(gamma-1) t^alpha).
inline double apriori_bound(const SolverConfig& cfg, double u0_sup, double t)
{
    if (cfg.truncation < 1) throw std::invalid_argument("apriori_bound: truncation level n is not set");
    if (t < 0.0) throw std::domain_error("apriori_bound: t must be non-negative");
    const double base = u0_sup + 1.0 / cfg.truncation;
    if (t == 0.0) return base;
    const double z = truncated_lipschitz(cfg.truncation, cfg.gamma) * std::pow(t, cfg.alpha);
    return base * mittag_leffler(MLParams(cfg.alpha, 1.0), z);
}

// ---------------------------------------------------------------------------
// Trajectory

enum class RunStatus { Completed, BlowupSuspected, Truncated };

inline const char* to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::BlowupSuspected: return "blow-up suspected";
    case RunStatus::Truncated: return "stopped at T*";
    }
    return "?";
}

struct LevelDiagnostics {
    double t = 0.0;
    double l1 = 0.0;
    double lp = 0.0;
    double linf = 0.0;
    double min = 0.0;
    double mass = 0.0;
    int picard_iterations = 0;
    double picard_residual = 0.0;
};

inline LevelDiagnostics diagnose(const Field& f, double p)
{
    LevelDiagnostics d;
    d.t = f.time_label;
    d.l1 = norm_lp(f, 1.0);
    d.lp = norm_lp(f, p);
    d.linf = norm_linf(f);
    d.min = f.min();
    d.mass = f.mass();
    return d;
}

struct Trajectory {
    SolverConfig config;
    std::vector<double> times;
    std::vector<Field> fields;
    std::vector<LevelDiagnostics> levels;
    RunStatus status = RunStatus::Completed;
    double guard_threshold = 0.0;
    /// Time of the guard crossing, or of T* for positivity runs.
    std::optional<double> stop_time;
    int halvings = 0;
    std::vector<std::vector<double>> residual_history;

    std::size_t size() const { return times.size(); }
    const Field& back() const { return fields.back(); }

    /// Index of the last level with t <= t_query.
    std::size_t level_at(double t_query) const
    {
        const auto it = std::upper_bound(times.begin(), times.end(), t_query);
        if (it == times.begin()) throw std::out_of_range("Trajectory: time before the first level");
        return std::size_t(it - times.begin()) - 1;
    }

    nlohmann::json metadata() const
    {
        nlohmann::json res = nlohmann::json::array();
        for (std::size_t k = 0; k < residual_history.size(); ++k) res.push_back(residual_history[k]);
        nlohmann::json j{{"config", config.to_json()},
                         {"status", to_string(status)},
                         {"levels", times.size()},
                         {"final_time", times.empty() ? 0.0 : times.back()},
                         {"guard_threshold", guard_threshold},
                         {"halvings", halvings},
                         {"residual_history", res}};
        j["stop_time"] = stop_time ? nlohmann::json(*stop_time) : nlohmann::json(nullptr);
        return j;
    }
};

// ---------------------------------------------------------------------------
// Solver core

namespace detail {

template <class F>
void parallel_chunks(std::size_t count, int jobs, F&& fn)
{
    if (jobs <= 1 || count < 256) {
        fn(std::size_t(0), count);
        return;
    }
    const std::size_t chunk = (count + jobs - 1) / jobs;
    std::vector<std::future<void>> tasks;
    for (std::size_t b = 0; b < count; b += chunk)
        tasks.push_back(std::async(std::launch::async, [&, b] { fn(b, std::min(count, b + chunk)); }));
    for (auto& t : tasks) t.get();
}

class MildStepper {
public:
    using cplx = std::complex<double>;

    MildStepper(const SolverConfig& cfg, const Field& u0) : cfg_(cfg), sym_(cfg.beta, cfg.measure), ws_(cfg.grid)
    {
        const Grid& g = cfg.grid;
        ModeTable modes(g);
        psi_.resize(modes.size());
        for (std::size_t m = 0; m < modes.size(); ++m) psi_[m] = psi_at(sym_, modes.xi[m], g.dim);
        ez_ = ml_table(cfg.alpha, 1.0);
        e1_ = ml_table(cfg.alpha, cfg.alpha + 1.0);
        e2_ = ml_table(cfg.alpha, cfg.alpha + 2.0);
        u0_hat_ = forward(u0.values);
        times_.push_back(0.0);
        nl_hat_.push_back(forward(nonlinear(u0.values)));
    }

    const std::vector<double>& times() const { return times_; }

    struct StepResult {
        bool converged = false;
        std::vector<double> u;
        std::vector<double> residuals;
    };

    /// Solve for the node value at t_new > times().back(), starting Picard
    /// from `guess`. Nothing is committed.
    StepResult solve(double t_new, const std::vector<double>& guess) const
    {
        const std::size_t M = psi_.size();
        const std::size_t k = times_.size();
        std::vector<cplx> base(M);
        std::vector<double> w_new(M);
        const double a = cfg_.alpha;
        std::vector<double> tau(k), ta(k);
        for (std::size_t j = 0; j < k; ++j) {
            tau[j] = t_new - times_[j];
            ta[j] = std::pow(tau[j], a);
        }
        const double ta_new = std::pow(t_new, a);
        parallel_chunks(M, cfg_.jobs, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> k1(k + 1), k2(k + 1);
            for (std::size_t m = lo; m < hi; ++m) {
                const double ps = psi_[m];
                for (std::size_t j = 0; j < k; ++j) {
                    const double z = ta[j] * ps;
                    k1[j] = ta[j] * (*e1_)(z);
                    k2[j] = ta[j] * tau[j] * (*e2_)(z);
                }
                k1[k] = 0.0;
                k2[k] = 0.0;
                cplx acc = (*ez_)(ta_new * ps) * u0_hat_[m];
                if (cfg_.nonlinearity != NonlinearityKind::None) {
                    for (std::size_t i = 0; i < k; ++i) {
                        const double dt = (i + 1 < k ? times_[i + 1] : t_new) - times_[i];
                        const double mean = (k2[i] - k2[i + 1]) / dt;
                        const double wl = k1[i] - mean;
                        acc += wl * nl_hat_[i][m];
                        if (i + 1 < k) acc += (mean - k1[i + 1]) * nl_hat_[i + 1][m];
                        else w_new[m] = mean;
                    }
                }
                base[m] = acc;
            }
        });

        StepResult res;
        if (cfg_.nonlinearity == NonlinearityKind::None) {
            res.u = backward(base);
            res.converged = true;
            return res;
        }
        std::vector<double> u = guess;
        std::vector<cplx> spec(M);
        for (int it = 0; it < cfg_.picard_max_iter; ++it) {
            const auto nh = forward(nonlinear(u));
            for (std::size_t m = 0; m < M; ++m) spec[m] = base[m] + w_new[m] * nh[m];
            auto next = backward(spec);
            double diff = 0.0, sup = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                diff = std::max(diff, std::abs(next[i] - u[i]));
                sup = std::max(sup, std::abs(next[i]));
            }
            u = std::move(next);
            res.residuals.push_back(diff);
            if (!std::isfinite(diff)) return res;
            if (diff <= cfg_.picard_tol * std::max(1.0, sup)) {
                res.converged = true;
                res.u = std::move(u);
                return res;
            }
            const std::size_t r = res.residuals.size();
            // a growing residual means the step is outside the contraction radius
            if (r >= 3 && res.residuals[r - 1] > res.residuals[r - 2] && res.residuals[r - 2] > res.residuals[r - 3])
                return res;
        }
        return res;
    }

    void commit(double t_new, const std::vector<double>& u)
    {
        times_.push_back(t_new);
        nl_hat_.push_back(forward(nonlinear(u)));
    }

    std::vector<double> nonlinear(const std::vector<double>& u) const
    {
        std::vector<double> out(u.size());
        switch (cfg_.nonlinearity) {
        case NonlinearityKind::Power:
            for (std::size_t i = 0; i < u.size(); ++i) out[i] = power_nonlinearity(cfg_.gamma, u[i]);
            break;
        case NonlinearityKind::Truncated:
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double v = (u[i] < 0.0 && u[i] > -1e-8) ? 0.0 : u[i];
                out[i] = truncated_nonlinearity(cfg_.truncation, cfg_.gamma, v);
            }
            break;
        case NonlinearityKind::None: break;
        }
        return out;
    }

private:
    std::vector<cplx> forward(const std::vector<double>& v) const
    {
        std::copy(v.begin(), v.end(), ws_.real());
        ws_.forward();
        return std::vector<cplx>(ws_.spectrum(), ws_.spectrum() + cfg_.grid.spectrum_size());
    }
    std::vector<double> backward(const std::vector<cplx>& s) const
    {
        std::copy(s.begin(), s.end(), ws_.spectrum());
        ws_.backward();
        const double scale = 1.0 / double(cfg_.grid.size());
        std::vector<double> out(cfg_.grid.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = ws_.real()[i] * scale;
        return out;
    }

    SolverConfig cfg_;
    StableSymbol sym_;
    mutable FftWorkspace ws_;
    std::vector<double> psi_;
    std::shared_ptr<const MittagLefflerTable> ez_, e1_, e2_;
    std::vector<cplx> u0_hat_;
    std::vector<double> times_;
    std::vector<std::vector<cplx>> nl_hat_;
};

struct SolveControl {
    /// Sup norm entering the truncated-mode a priori assertion.
    std::optional<double> bound_sup;
    /// Stop once the sup norm exceeds this level (positivity runs).
    std::optional<double> stop_above;
};

inline Trajectory run_mild(const SolverConfig& cfg, const Field& u0, const SolveControl& ctl)
{
    cfg.validate();
    if (!(u0.grid == cfg.grid)) throw GridMismatch("mild_solve: initial data lives on a different grid");
    for (double v : u0.values)
        if (!std::isfinite(v)) throw std::invalid_argument("mild_solve: initial data must be finite");

    Trajectory tr;
    tr.config = cfg;
    const double sup0 = norm_linf(u0);
    tr.guard_threshold = cfg.guard_factor * std::max(sup0, std::numeric_limits<double>::min());
    const bool guard_active = sup0 > 0.0;
    MildStepper stepper(cfg, u0);

    auto record = [&](std::vector<double> values, double t, int iters, double resid) {
        Field f(cfg.grid, std::move(values), t);
        auto d = diagnose(f, cfg.norm_p);
        d.picard_iterations = iters;
        d.picard_residual = resid;
        tr.times.push_back(t);
        tr.levels.push_back(d);
        tr.fields.push_back(std::move(f));
    };
    {
        Field f0 = u0;
        f0.time_label = 0.0;
        record(f0.values, 0.0, 0, 0.0);
    }

    const auto mesh = cfg.mesh();
    // step actually taken after halvings; carried over so a stiff stretch is
    // not re-attempted at full length at every mesh node
    double dt_ok = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < mesh.size(); ++k) {
        const double target = mesh[k];
        while (tr.times.back() < target) {
            const double t_prev = tr.times.back();
            double dt = std::min(target - t_prev, 2.0 * dt_ok);
            double t_try = target - t_prev <= dt ? target : t_prev + dt;
            auto res = stepper.solve(t_try, tr.fields.back().values);
            int local = 0;
            while (!res.converged) {
                if (local >= cfg.max_halvings) {
                    nlohmann::json diag{{"t_prev", t_prev},
                                        {"t_try", t_try},
                                        {"linf_prev", tr.levels.back().linf},
                                        {"residuals", res.residuals},
                                        {"halvings", tr.halvings}};
                    throw SolverError("mild_solve: Picard iteration did not converge", diag);
                }
                dt *= 0.5;
                t_try = t_prev + dt;
                ++tr.halvings;
                ++local;
                res = stepper.solve(t_try, tr.fields.back().values);
            }
            dt_ok = local > 0 ? dt : std::numeric_limits<double>::infinity();
            stepper.commit(t_try, res.u);
            const double last_res = res.residuals.empty() ? 0.0 : res.residuals.back();
            tr.residual_history.push_back(res.residuals);
            record(std::move(res.u), t_try, int(tr.residual_history.back().size()), last_res);
            const double linf = tr.levels.back().linf;

            if (ctl.bound_sup && cfg.nonlinearity == NonlinearityKind::Truncated) {
                const double bound = apriori_bound(cfg, *ctl.bound_sup, t_try);
                if (linf > bound + 1e-6) {
                    std::ostringstream os;
                    os << "mild_solve: a priori bound violated at t = " << t_try << " (" << linf << " > " << bound
                       << ")";
                    throw std::logic_error(os.str());
                }
            }
            if (ctl.stop_above && linf > *ctl.stop_above) {
                tr.status = RunStatus::Truncated;
                tr.stop_time = t_try;
                return tr;
            }
            if (guard_active && linf > tr.guard_threshold) {
                tr.status = RunStatus::BlowupSuspected;
                tr.stop_time = t_try;
                return tr;
            }
        }
    }
    return tr;
}

}  // namespace detail

/// Solves the mild equation on the graded mesh of `cfg`. In truncated mode
/// the a priori Mittag-Leffler bound is asserted at every level.
inline Trajectory mild_solve(const SolverConfig& cfg, const Field& u0)
{
    detail::SolveControl ctl;
    if (cfg.nonlinearity == NonlinearityKind::Truncated) ctl.bound_sup = norm_linf(u0);
    return detail::run_mild(cfg, u0, ctl);
}

/// Monotone scheme: data u0 + 1/n, nonlinearity g_n, stopped at T*, the
/// first level where the sup norm leaves [0, n] (beyond it g_n and the power
/// law differ).
inline Trajectory positivity_run(const SolverConfig& cfg, const Field& u0)
{
    if (cfg.truncation < 1) throw std::invalid_argument("positivity_run: truncation level n must be set");
    for (double v : u0.values)
        if (v < 0.0) throw std::invalid_argument("positivity_run: initial data must be non-negative");
    SolverConfig c = cfg;
    c.nonlinearity = NonlinearityKind::Truncated;
    Field data = u0;
    for (double& v : data.values) v += 1.0 / c.truncation;
    detail::SolveControl ctl;
    ctl.bound_sup = norm_linf(u0);
    ctl.stop_above = double(c.truncation);
    return detail::run_mild(c, data, ctl);
}

}  // namespace fdlab
