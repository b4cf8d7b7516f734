#pragma once

// Blow-up and global-decay experiments around the critical exponent 1 + beta/d.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/fit.hpp"
#include "fdlab/grid.hpp"
#include "fdlab/io.hpp"
#include "fdlab/solver.hpp"

namespace fdlab {

/// H(t, x) = (4 pi t)^(-d/2) exp(-|x|^2 / 4t); refuses sqrt(t) outside [2h, L/8].
inline Field heat_kernel(double t, const Grid& grid)
{
    if (!(t > 0.0)) throw std::domain_error("heat_kernel: t must be positive");
    const double s = std::sqrt(t);
    if (s < 2.0 * grid.h() || s > grid.L / 8.0) {
        std::ostringstream os;
        os << "heat_kernel: sqrt(t) = " << s << " outside [2h, L/8] = [" << 2.0 * grid.h() << ", " << grid.L / 8.0
           << "]";
        throw ResolutionError(os.str());
    }
    const double c = std::pow(4.0 * std::numbers::pi * t, -0.5 * grid.dim);
    return sample(
        grid, [&](double x0, double x1) { return c * std::exp(-(x0 * x0 + x1 * x1) / (4.0 * t)); }, t);
}

inline bool heat_resolved(double t, const Grid& grid)
{
    const double s = std::sqrt(t);
    return t > 0.0 && s >= 2.0 * grid.h() && s <= grid.L / 8.0;
}

/// F(t) = int H(t, x) u(x) dx.
inline double fujita_functional(const Field& u, double t)
{
    const Field h = heat_kernel(t, u.grid);
    double s = 0.0;
    for (std::size_t k = 0; k < h.values.size(); ++k) s += h.values[k] * u.values[k];
    return s * u.grid.cell_volume();
}

inline double critical_exponent(double beta, int d)
{
    if (!(beta > 0.0 && beta < 2.0)) throw std::domain_error("critical_exponent: beta must lie in (0, 2)");
    if (d < 1) throw std::domain_error("critical_exponent: d must be >= 1");
    return 1.0 + beta / d;
}

/// Smooth bump A exp(1 - 1/(1 - (r/R)^2)) supported in r < R, peak A.
inline Field bump(const Grid& g, double amplitude, double radius)
{
    if (!(radius > 0.0)) throw std::invalid_argument("bump: radius must be positive");
    return sample(g, [&](double x0, double x1) {
        const double q = (x0 * x0 + x1 * x1) / (radius * radius);
        return q < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
    });
}

enum class ExperimentKind { BlowupSingle, GammaSweep, GlobalDecay };

inline const char* to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::BlowupSingle: return "blowup_single";
    case ExperimentKind::GammaSweep: return "gamma_sweep";
    case ExperimentKind::GlobalDecay: return "global_decay";
    }
    return "?";
}

struct SweepPoint {
    double gamma;
    double amplitude;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::BlowupSingle;
    SolverConfig solver;
    double amplitude = 1.0;
    double bump_radius = 2.0;
    std::vector<SweepPoint> sweep;
    double fit_t_min = 1.0;
    double fit_t_max = 20.0;
    int jobs = 1;

    void validate() const
    {
        solver.validate();
        if (!(amplitude >= 0.0)) throw std::invalid_argument("ExperimentSpec: amplitude must be non-negative");
        if (!(fit_t_min > 0.0 && fit_t_min < fit_t_max))
            throw std::invalid_argument("ExperimentSpec: fit window must satisfy 0 < t_min < t_max");
        if (fit_t_max > solver.horizon + 1e-12)
            throw std::invalid_argument("ExperimentSpec: fit window exceeds the horizon");
        for (std::size_t i = 1; i < sweep.size(); ++i)
            if (sweep[i].gamma < sweep[i - 1].gamma)
                throw std::invalid_argument("ExperimentSpec: sweep values must be sorted by gamma");
        if (jobs < 1) throw std::invalid_argument("ExperimentSpec: jobs must be >= 1");
    }
};

enum class RunVerdict { BlowupDetected, NoBlowup, DecayConfirmed, Inconclusive };

inline const char* to_string(RunVerdict v)
{
    switch (v) {
    case RunVerdict::BlowupDetected: return "blowup_detected";
    case RunVerdict::NoBlowup: return "no_blowup_within_horizon";
    case RunVerdict::DecayConfirmed: return "decay_confirmed";
    case RunVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct RunReport {
    std::string kind;
    RunVerdict verdict = RunVerdict::Inconclusive;
    double gamma = 0.0;
    double amplitude = 0.0;
    std::optional<double> blowup_time;
    double horizon = 0.0;
    // traces
    std::vector<double> t, l1, lp, linf, min;
    std::vector<double> fujita, scaled_fujita;  // NaN where H(t) is not resolved
    std::optional<bool> fujita_increasing;
    std::optional<bool> scaled_fujita_increasing;
    std::optional<double> lower_bound_c2;
    std::optional<bool> linf_nonincreasing_after_1;
    // decay
    std::vector<double> weighted_l1, weighted_lp, weighted_linf;
    std::optional<double> decay_slope, decay_slope_stderr, decay_slope_limit;
    std::optional<double> data_constant;
    std::vector<double> trace_growth;  // max over window / value at t_min, per weighted trace
    std::optional<bool> weighted_linf_nonincreasing;
    nlohmann::json params;
    std::string note;

    nlohmann::json to_json() const
    {
        auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
        nlohmann::json j{{"kind", kind},
                         {"verdict", to_string(verdict)},
                         {"gamma", gamma},
                         {"amplitude", amplitude},
                         {"blowup_time", opt(blowup_time)},
                         {"horizon", horizon},
                         {"levels", t.size()},
                         {"final_time", t.empty() ? 0.0 : t.back()},
                         {"final_linf", linf.empty() ? 0.0 : linf.back()},
                         {"fujita_increasing", opt(fujita_increasing)},
                         {"scaled_fujita_increasing", opt(scaled_fujita_increasing)},
                         {"lower_bound_c2", opt(lower_bound_c2)},
                         {"linf_nonincreasing_after_1", opt(linf_nonincreasing_after_1)},
                         {"decay_slope", opt(decay_slope)},
                         {"decay_slope_stderr", opt(decay_slope_stderr)},
                         {"decay_slope_limit", opt(decay_slope_limit)},
                         {"data_constant", opt(data_constant)},
                         {"trace_growth", trace_growth},
                         {"weighted_linf_nonincreasing", opt(weighted_linf_nonincreasing)},
                         {"params", params},
                         {"note", note}};
        return j;
    }

    io::CsvTable traces() const
    {
        io::CsvTable tab({"t", "l1", "lp", "linf", "min", "F", "tF", "w_l1", "w_lp", "w_linf"});
        auto at = [](const std::vector<double>& v, std::size_t k) {
            return k < v.size() ? io::fmt(v[k]) : std::string("nan");
        };
        for (std::size_t k = 0; k < t.size(); ++k)
            tab.add_row({io::fmt(t[k]), at(l1, k), at(lp, k), at(linf, k), at(min, k), at(fujita, k),
                         at(scaled_fujita, k), at(weighted_l1, k), at(weighted_lp, k), at(weighted_linf, k)});
        return tab;
    }
};

namespace detail {

inline bool nondecreasing_finite(const std::vector<double>& v, double rel = 1e-9)
{
    double prev = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (double x : v) {
        if (!std::isfinite(x)) continue;
        if (any && x < prev - rel * std::abs(prev)) return false;
        prev = x;
        any = true;
    }
    return any;
}

inline bool nonincreasing_from(const std::vector<double>& t, const std::vector<double>& v, double t0, double rel = 1e-9)
{
    double prev = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t0) continue;
        if (any && v[k] > prev + rel * std::abs(prev)) return false;
        prev = v[k];
        any = true;
    }
    return any;
}

inline void fill_traces(RunReport& rep, const Trajectory& tr)
{
    const Grid& g = tr.config.grid;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const auto& d = tr.levels[k];
        rep.t.push_back(d.t);
        rep.l1.push_back(d.l1);
        rep.lp.push_back(d.lp);
        rep.linf.push_back(d.linf);
        rep.min.push_back(d.min);
        if (heat_resolved(d.t, g)) {
            const double f = fujita_functional(tr.fields[k], d.t);
            rep.fujita.push_back(f);
            rep.scaled_fujita.push_back(std::pow(d.t, 0.5 * g.dim) * f);
        } else {
            rep.fujita.push_back(std::numeric_limits<double>::quiet_NaN());
            rep.scaled_fujita.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    rep.fujita_increasing = nondecreasing_finite(rep.fujita);
    rep.scaled_fujita_increasing = nondecreasing_finite(rep.scaled_fujita);
}

/// min of u / (t^(-alpha d/beta) e^(-|x|^2/t)) over levels t > 1 and nodes
/// with |x| <= L/2 and u above 1e-12 of its peak.
inline std::optional<double> lower_bound_constant(const Trajectory& tr)
{
    const auto& cfg = tr.config;
    const Grid& g = cfg.grid;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.times[k];
        if (t <= 1.0) continue;
        const Field& f = tr.fields[k];
        const double peak = norm_linf(f);
        const double pre = std::pow(t, -cfg.alpha * g.dim / cfg.beta);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = g.radius(i);
            if (r > 0.5 * g.L) continue;
            const double shape = pre * std::exp(-r * r / t);
            if (shape < 1e-300 || f.values[i] < 1e-12 * peak) continue;
            best = std::min(best, f.values[i] / shape);
        }
    }
    if (!std::isfinite(best)) return std::nullopt;
    return best;
}

/// Guard crossing with the last three levels increasing and log-convex.
inline bool superlinear_log_growth(const Trajectory& tr)
{
    const std::size_t m = tr.size();
    if (m < 3) return false;
    const double t1 = tr.times[m - 3], t2 = tr.times[m - 2], t3 = tr.times[m - 1];
    const double u1 = tr.levels[m - 3].linf, u2 = tr.levels[m - 2].linf, u3 = tr.levels[m - 1].linf;
    if (!(u1 > 0.0 && u1 < u2 && u2 < u3)) return false;
    const double s1 = (std::log(u2) - std::log(u1)) / (t2 - t1);
    const double s2 = (std::log(u3) - std::log(u2)) / (t3 - t2);
    return s2 > s1;
}

inline RunReport blowup_report(const SolverConfig& cfg, double amplitude, double radius)
{
    RunReport rep;
    rep.kind = "blowup";
    rep.gamma = cfg.gamma;
    rep.amplitude = amplitude;
    rep.horizon = cfg.horizon;
    rep.params = cfg.to_json();
    rep.params["bump_radius"] = radius;
    const Field u0 = bump(cfg.grid, amplitude, radius);
    Trajectory tr;
    try {
        tr = mild_solve(cfg, u0);
    } catch (const SolverError& e) {
        rep.verdict = RunVerdict::Inconclusive;
        rep.note = std::string(e.what()) + ": " + e.diagnostics().dump();
        return rep;
    }
    fill_traces(rep, tr);
    rep.linf_nonincreasing_after_1 = nonincreasing_from(rep.t, rep.linf, 1.0);
    if (amplitude == 0.0) {
        rep.verdict = tr.status == RunStatus::Completed ? RunVerdict::NoBlowup : RunVerdict::Inconclusive;
        rep.note = "zero data";
        return rep;
    }
    if (tr.status == RunStatus::BlowupSuspected) {
        if (superlinear_log_growth(tr)) {
            rep.verdict = RunVerdict::BlowupDetected;
            rep.blowup_time = tr.stop_time;
            rep.lower_bound_c2 = lower_bound_constant(tr);
        } else {
            rep.verdict = RunVerdict::Inconclusive;
            rep.note = "guard crossed without super-linear growth of log sup norm";
        }
    } else {
        rep.verdict = RunVerdict::NoBlowup;
    }
    return rep;
}

}  // namespace detail

inline void require_blowup_hypothesis(const SolverConfig& cfg)
{
    if (std::abs(cfg.alpha - 0.5 * cfg.beta) > 1e-12)
        throw std::invalid_argument("run_blowup: requires alpha = beta/2");
}

inline RunReport run_blowup(const ExperimentSpec& spec)
{
    spec.validate();
    require_blowup_hypothesis(spec.solver);
    return detail::blowup_report(spec.solver, spec.amplitude, spec.bump_radius);
}

struct SweepResult {
    std::vector<RunReport> reports;
    bool consistent = true;
    std::vector<std::string> flags;

    io::CsvTable summary() const
    {
        io::CsvTable tab({"gamma", "amplitude", "verdict", "t_star", "final_linf", "linf_slope_after_1",
                          "linf_nonincreasing_after_1"});
        for (const auto& r : reports) {
            // log-log slope of the sup norm over [1, final time]
            std::vector<double> lt, lu;
            for (std::size_t k = 0; k < r.t.size(); ++k)
                if (r.t[k] >= 1.0 && r.linf[k] > 0.0) {
                    lt.push_back(std::log(r.t[k]));
                    lu.push_back(std::log(r.linf[k]));
                }
            const std::string slope = lt.size() >= 3 ? io::fmt(fit::linear(lt, lu).slope) : "nan";
            tab.add_row({io::fmt(r.gamma), io::fmt(r.amplitude), to_string(r.verdict),
                         r.blowup_time ? io::fmt(*r.blowup_time) : "nan",
                         r.linf.empty() ? "nan" : io::fmt(r.linf.back()), slope,
                         r.linf_nonincreasing_after_1 ? (*r.linf_nonincreasing_after_1 ? "true" : "false") : "nan"});
        }
        return tab;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : reports) runs.push_back(r.to_json());
        return {{"consistent", consistent}, {"flags", flags}, {"runs", runs}};
    }
};

/// Runs every sweep point in parallel and checks that the verdicts partition
/// around 1 + beta/d: sub-critical runs blow up, super-critical runs persist
/// with L-infinity nonincreasing after t = 1, and at fixed amplitude no
/// blow-up occurs above a gamma that persisted.
inline SweepResult run_gamma_sweep(const ExperimentSpec& spec)
{
    spec.validate();
    require_blowup_hypothesis(spec.solver);
    if (spec.sweep.empty()) throw std::invalid_argument("run_gamma_sweep: empty sweep");
    const double crit = critical_exponent(spec.solver.beta, spec.solver.grid.dim);

    SweepResult out;
    out.reports.resize(spec.sweep.size());
    std::vector<std::future<void>> tasks;
    std::size_t next = 0;
    auto launch = [&](std::size_t i) {
        SolverConfig cfg = spec.solver;
        cfg.gamma = spec.sweep[i].gamma;
        cfg.jobs = 1;
        return std::async(std::launch::async, [&out, cfg, i, &spec] {
            out.reports[i] = detail::blowup_report(cfg, spec.sweep[i].amplitude, spec.bump_radius);
        });
    };
    while (next < spec.sweep.size()) {
        tasks.clear();
        for (int j = 0; j < spec.jobs && next < spec.sweep.size(); ++j) tasks.push_back(launch(next++));
        for (auto& t : tasks) t.get();
    }

    for (const auto& r : out.reports) {
        std::ostringstream os;
        os << "gamma=" << r.gamma << " amplitude=" << r.amplitude;
        if (r.verdict == RunVerdict::Inconclusive) {
            out.consistent = false;
            out.flags.push_back(os.str() + ": inconclusive");
        } else if (r.gamma < crit - 1e-12 && r.verdict != RunVerdict::BlowupDetected) {
            out.consistent = false;
            out.flags.push_back(os.str() + ": sub-critical run did not blow up");
        } else if (r.gamma > crit + 1e-12) {
            if (r.verdict != RunVerdict::NoBlowup) {
                out.consistent = false;
                out.flags.push_back(os.str() + ": super-critical run blew up");
            } else if (!r.linf_nonincreasing_after_1.value_or(false)) {
                out.consistent = false;
                out.flags.push_back(os.str() + ": L-infinity not nonincreasing after t = 1");
            }
        }
    }
    for (std::size_t i = 0; i < out.reports.size(); ++i)
        for (std::size_t j = i + 1; j < out.reports.size(); ++j) {
            const auto& a = out.reports[i];
            const auto& b = out.reports[j];
            if (a.amplitude == b.amplitude && a.gamma < b.gamma && a.verdict == RunVerdict::NoBlowup &&
                b.verdict == RunVerdict::BlowupDetected) {
                out.consistent = false;
                std::ostringstream os;
                os << "non-monotone in gamma at amplitude " << a.amplitude << ": gamma=" << a.gamma
                   << " persists, gamma=" << b.gamma << " blows up";
                out.flags.push_back(os.str());
            }
        }
    return out;
}

/// Small-data run checked against the decay estimate
///   |u|_1 + t^((ad/b)(1/p' - 1/p)) |u|_p + t^(ad/(b p')) |u|_inf <= C (data norms)
/// over [fit_t_min, fit_t_max].
inline RunReport run_global_decay(const ExperimentSpec& spec, double p, double p_prime)
{
    spec.validate();
    const SolverConfig& base = spec.solver;
    const auto window = validate_params(base, p, p_prime);
    if (!window.global_window) {
        std::ostringstream os;
        os << "run_global_decay: (gamma, p, p') outside the global-existence window: " << window.to_json().dump();
        throw std::invalid_argument(os.str());
    }
    SolverConfig cfg = base;
    cfg.norm_p = p;
    RunReport rep;
    rep.kind = "global_decay";
    rep.gamma = cfg.gamma;
    rep.amplitude = spec.amplitude;
    rep.horizon = cfg.horizon;
    rep.params = cfg.to_json();
    rep.params["bump_radius"] = spec.bump_radius;
    rep.params["p"] = p;
    rep.params["p_prime"] = p_prime;
    rep.params["fit_window"] = {spec.fit_t_min, spec.fit_t_max};

    const Field u0 = bump(cfg.grid, spec.amplitude, spec.bump_radius);
    Trajectory tr;
    try {
        tr = mild_solve(cfg, u0);
    } catch (const SolverError& e) {
        rep.verdict = RunVerdict::Inconclusive;
        rep.note = std::string(e.what()) + ": " + e.diagnostics().dump();
        return rep;
    }
    detail::fill_traces(rep, tr);
    rep.linf_nonincreasing_after_1 = detail::nonincreasing_from(rep.t, rep.linf, 1.0);
    if (tr.status != RunStatus::Completed) {
        rep.verdict = RunVerdict::Inconclusive;
        rep.note = "guard crossed in a small-data run";
        return rep;
    }

    const double ad = cfg.alpha * cfg.grid.dim / cfg.beta;
    const double e_p = ad * (1.0 / p_prime - 1.0 / p);
    const double e_inf = ad / p_prime;
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
        const double t = rep.t[k];
        rep.weighted_l1.push_back(rep.l1[k]);
        rep.weighted_lp.push_back(std::pow(t, e_p) * rep.lp[k]);
        rep.weighted_linf.push_back(std::pow(t, e_inf) * rep.linf[k]);
    }

    const double data = norm_lp(u0, 1.0) + norm_lp(u0, p) + norm_linf(u0);
    std::vector<double> lt, lu;
    double cmax = 0.0;
    std::array<double, 3> first{}, peak{};
    bool have_first = false;
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
        const double t = rep.t[k];
        if (t < spec.fit_t_min - 1e-12 || t > spec.fit_t_max + 1e-12) continue;
        const std::array<double, 3> w{rep.weighted_l1[k], rep.weighted_lp[k], rep.weighted_linf[k]};
        if (!have_first) {
            first = w;
            have_first = true;
        }
        for (int q = 0; q < 3; ++q) peak[q] = std::max(peak[q], w[q]);
        cmax = std::max(cmax, (w[0] + w[1] + w[2]) / data);
        lt.push_back(std::log(t));
        lu.push_back(std::log(rep.linf[k]));
    }
    if (lt.size() < 3) {
        rep.verdict = RunVerdict::Inconclusive;
        rep.note = "too few levels in the fit window";
        return rep;
    }
    rep.data_constant = cmax;
    for (int q = 0; q < 3; ++q) rep.trace_growth.push_back(peak[q] / first[q]);
    {
        std::vector<double> tt, ww;
        for (std::size_t k = 0; k < rep.t.size(); ++k)
            if (rep.t[k] >= spec.fit_t_min - 1e-12 && rep.t[k] <= spec.fit_t_max + 1e-12) {
                tt.push_back(rep.t[k]);
                ww.push_back(rep.weighted_linf[k]);
            }
        rep.weighted_linf_nonincreasing = detail::nonincreasing_from(tt, ww, spec.fit_t_min);
    }
    const auto f = fit::linear(lt, lu);
    rep.decay_slope = f.slope;
    rep.decay_slope_stderr = f.slope_stderr;
    rep.decay_slope_limit = -e_inf + 0.2;
    const bool bounded = std::all_of(rep.trace_growth.begin(), rep.trace_growth.end(), [](double g) { return g <= 5.0; });
    rep.verdict = (f.slope <= *rep.decay_slope_limit && bounded) ? RunVerdict::DecayConfirmed : RunVerdict::Inconclusive;
    if (rep.verdict != RunVerdict::DecayConfirmed)
        rep.note = bounded ? "L-infinity slope above the allowed bound" : "a weighted trace grew by more than 5x";
    return rep;
}

}  // namespace fdlab
