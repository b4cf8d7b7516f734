// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/experiments.hpp"
#include "fdlab/io.hpp"
#include "fdlab/solver.hpp"
#include "fdlab/specfun.hpp"
#include "fdlab/subkernels.hpp"
#include "fdlab/suite.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fdlab;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [x] " << what << ";";
        }
    }
    template <class T>
    void note(const std::string& key, const T& v)
    {
        detail << " " << key << "=" << v << ";";
    }
};

double max_abs_diff(const Field& a, const Field& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

std::string num(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

StableSymbol symbol_for(int d, double beta) { return StableSymbol(beta, default_measure(d)); }

Grid matrix_grid(int d) { return d == 1 ? Grid(1, 1024, 32.0) : Grid(2, 128, 8.0); }

void special_functions(Outcome& o)
{
    double e1 = 0.0;
    for (double z = -20.0; z <= 20.0; z += 0.05)
        e1 = std::max(e1, std::abs(mittag_leffler(MLParams(1.0, 1.0), z) / std::exp(z) - 1.0));
    o.note("exp_rel", e1);
    o.require(e1 <= 1e-10, "E_{1,1} vs exp");

    const StableIndex half(0.5);
    double levy = 0.0;
    for (double t = 0.05; t <= 50.0; t *= 1.05) {
        const double ref = 0.5 / std::sqrt(std::numbers::pi) * std::pow(t, -1.5) * std::exp(-0.25 / t);
        levy = std::max(levy, std::abs(stable_density(half, t) / ref - 1.0));
    }
    o.note("levy_rel", levy);
    o.require(levy <= 1e-6, "Levy density");

    for (double a : {0.3, 0.5, 0.7}) {
        const StableIndex idx(a);
        const double slope = (log_stable_density(idx, 1e4) - log_stable_density(idx, 1e2)) / std::log(1e2);
        const double slope_err = std::abs(slope / (-(1.0 + a)) - 1.0);
        const double tau = std::pow(1000.0, -(1.0 - a) / a);
        const double rate = -log_stable_density(idx, tau) * std::pow(tau, a / (1.0 - a));
        const double rate_err = std::abs(rate / stable_rate_constant(idx) - 1.0);
        o.note("a" + num(a) + "_slope_err", slope_err);
        o.note("a" + num(a) + "_rate_err", rate_err);
        o.require(slope_err <= 0.02, "tail slope at alpha " + num(a));
        o.require(rate_err <= 0.05, "rate constant at alpha " + num(a));
    }
}

template <class F>
void over_matrix(F&& body)
{
    for (int d : {1, 2})
        for (double alpha : {0.3, 0.5, 0.75})
            for (double beta : {0.6, 1.0, 1.5})
                for (double t : {0.25, 1.0, 4.0}) body(d, alpha, beta, t);
}

void normalizations(Outcome& o)
{
    double wz = 0.0, wy = 0.0;
    over_matrix([&](int d, double alpha, double beta, double t) {
        const auto sym = symbol_for(d, beta);
        const Grid g = matrix_grid(d);
        const double ga = g_kernel(alpha, t);
        for (const Field& z : {z_kernel(sym, alpha, t, g), z_kernel_fourier(sym, alpha, t, g)})
            wz = std::max(wz, std::abs(z.mass() - 1.0));
        for (const Field& y : {y_kernel(sym, alpha, t, g), y_kernel_fourier(sym, alpha, t, g)})
            wy = std::max(wy, std::abs(y.mass() - ga) / ga);
    });
    o.note("worst_z", wz);
    o.note("worst_y_rel", wy);
    o.require(wz <= 2e-3, "Z mass");
    o.require(wy <= 2e-3, "Y mass");
}

void subordination_vs_fourier(Outcome& o)
{
    double wz = 0.0, wy = 0.0;
    over_matrix([&](int d, double alpha, double beta, double t) {
        const auto sym = symbol_for(d, beta);
        const Grid g = matrix_grid(d);
        const Field zf = z_kernel_fourier(sym, alpha, t, g);
        const Field yf = y_kernel_fourier(sym, alpha, t, g);
        wz = std::max(wz, max_abs_diff(z_kernel(sym, alpha, t, g), zf) / norm_linf(zf));
        wy = std::max(wy, max_abs_diff(y_kernel(sym, alpha, t, g), yf) / norm_linf(yf));
    });
    o.note("worst_z_rel_peak", wz);
    o.note("worst_y_rel_peak", wy);
    o.require(wz <= 1e-3, "Z subordination vs Fourier");
    o.require(wy <= 2e-3, "Y subordination vs Fourier");
}

void yz_relation(Outcome& o)
{
    struct Case {
        Grid g;
        double alpha, beta;
    };
    for (const Case& c : {Case{Grid(1, 1024, 64.0), 0.5, 1.0}, Case{Grid(1, 1024, 64.0), 0.6, 1.5},
                          Case{Grid(2, 256, 32.0), 0.4, 1.0}}) {
        const double t = 2.0;
        const auto tab = KernelTable::build(symbol_for(c.g.dim, c.beta), c.alpha, c.g, {t / 1.1, t, t * 1.1});
        const auto rep = verify_yz_relation(tab, omega_probes(c.g, c.alpha, c.beta, t, {0.5, 1.0, 10.0}));
        o.note("d" + std::to_string(c.g.dim) + "_a" + num(c.alpha) + "_b" + num(c.beta), rep.max_residual);
        o.require(rep.pass && rep.max_residual <= 2e-2, "YZ residual");
    }
}

struct Cli {
    fs::path dir;
    int status = -1;
    nlohmann::json estimates;
};

Cli run_default_matrix()
{
    Cli c;
    c.dir = fs::temp_directory_path() / "fdlab_acceptance_estimates";
    fs::remove_all(c.dir);
    fs::create_directories(c.dir);
    std::ofstream(c.dir / "estimates.ini") << "[estimates]\nmatrix = default\n";
    const std::string cmd = std::string(FDLAB_CLI) + " verify-estimates --config " + (c.dir / "estimates.ini").string() +
                            " --out " + (c.dir / "out").string() + " > " + (c.dir / "stdout.txt").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    c.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream is(c.dir / "out" / "estimates.json");
    if (is) c.estimates = nlohmann::json::parse(is);
    return c;
}

void two_sided(Outcome& o, const Cli& cli)
{
    o.note("exit", cli.status);
    o.require(cli.status == 0, "verify-estimates exit status");
    int checks = 0, controls_failed = 0;
    std::set<std::string> cases;
    if (cli.estimates.is_object())
        for (const auto& e : cli.estimates.at("entries")) {
            const auto& r = e.at("report");
            if (r.at("check") != "two_sided") continue;
            ++checks;
            cases.insert(r.at("case").get<std::string>());
            o.require(r.at("verdict") == "pass", "two-sided " + e.at("row").get<std::string>() + " " +
                                                     r.at("case").get<std::string>());
            if (e.contains("negative_control") && e.at("negative_control").at("verdict") == "fail") ++controls_failed;
        }
    o.note("two_sided_checks", checks);
    o.note("distinct_cases", cases.size());
    o.note("controls_failed", controls_failed);
    o.require(checks > 0, "two-sided checks present");
    o.require(controls_failed == checks, "every negative control fails");
}

void gaussian(Outcome& o, const Cli& cli)
{
    int seen = 0;
    if (cli.estimates.is_object())
        for (const auto& e : cli.estimates.at("entries")) {
            const auto& r = e.at("report");
            if (r.at("check") != "gaussian_lower_bound") continue;
            ++seen;
            const double c1 = r.value("fitted_constant", 0.0);
            const std::string tag = e.at("row").get<std::string>() + "_" + r.at("parameters").at("kernel").get<std::string>();
            o.note(tag + "_C1", c1);
            o.require(r.at("verdict") == "pass" && c1 > 0.0, tag);
        }
    o.require(seen == 4, "four Gaussian checks (Z and Y at beta 0.8 and 1.0)");
}

void approximate_identity(Outcome& o)
{
    struct Case {
        Grid g;
        double alpha, beta, radius;
    };
    for (const Case& c : {Case{Grid(1, 2048, 16.0), 0.5, 1.0, 4.0}, Case{Grid(1, 2048, 16.0), 0.75, 1.5, 4.0},
                          Case{Grid(2, 512, 8.0), 0.5, 1.0, 3.0}}) {
        const auto sym = symbol_for(c.g.dim, c.beta);
        const Field f = bump(c.g, 1.0, c.radius);
        const double t0 = std::pow(c.g.h(), c.beta / c.alpha) * (1.0 + 1e-9);
        std::vector<double> err;
        for (double t : geometric_ladder(t0, 2.0, 6))
            err.push_back(max_abs_diff(convolve(z_kernel_fourier(sym, c.alpha, t, c.g), f), f) / norm_linf(f));
        bool monotone = true;
        for (std::size_t i = 1; i < err.size(); ++i) monotone = monotone && err[i] >= err[i - 1];
        const std::string tag = "d" + std::to_string(c.g.dim) + "_a" + num(c.alpha) + "_b" + num(c.beta);
        o.note(tag + "_err_at_t0", err.front());
        o.require(err.front() <= 0.02, tag + " error at smallest t");
        o.require(monotone, tag + " error decreases as t shrinks");
    }
}

void solver_oracle(Outcome& o)
{
    SolverConfig c;
    c.alpha = 0.5;
    c.beta = 1.0;
    c.gamma = 1.5;
    c.grid = Grid(1, 128, 8.0);
    c.horizon = 0.4;
    c.steps = 200;
    Field one(c.grid);
    for (auto& v : one.values) v = 1.0;
    const auto tr = mild_solve(c, one);
    double worst = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double ref = oracle::scalar_volterra(c.alpha, c.gamma, 1.0, tr.times[k]);
        worst = std::max(worst, std::abs(tr.levels[k].linf - ref) / ref);
    }
    o.note("oracle_rel", worst);
    o.require(tr.status == RunStatus::Completed && worst <= 1e-3, "homogeneous data vs scalar oracle");

    SolverConfig lin = c;
    lin.nonlinearity = NonlinearityKind::None;
    lin.horizon = 2.0;
    lin.steps = 40;
    const Field u0 = bump(lin.grid, 1.0, 1.0);
    const auto tl = mild_solve(lin, u0);
    const auto sym = StableSymbol(lin.beta, lin.measure);
    double lerr = 0.0;
    for (std::size_t k = 1; k < tl.size(); ++k) {
        if (kernel_scale(lin.alpha, lin.beta, tl.times[k]) < lin.grid.h()) continue;
        lerr = std::max(lerr, max_abs_diff(convolve(z_kernel_fourier(sym, lin.alpha, tl.times[k], lin.grid), u0),
                                           tl.fields[k]));
    }
    o.note("linear_err", lerr);
    o.require(lerr <= 1e-9, "linear mode equals Z * u0");

    SolverConfig tc = c;
    tc.nonlinearity = NonlinearityKind::Truncated;
    tc.gamma = 2.0;
    tc.horizon = 3.0;
    bool within = true;
    double margin = 0.0;
    for (int n : {1, 2, 4}) {
        tc.truncation = n;
        try {
            const auto tt = mild_solve(tc, u0);
            for (std::size_t k = 0; k < tt.size(); ++k)
                margin = std::max(margin, tt.levels[k].linf / apriori_bound(tc, norm_linf(u0), tt.times[k]));
        } catch (const std::logic_error& e) {
            within = false;
            o.note("violation", e.what());
        }
    }
    o.note("max_linf_over_bound", margin);
    o.require(within, "truncated runs stay under the a priori bound");
}

ExperimentSpec fujita_spec()
{
    ExperimentSpec s;
    s.kind = ExperimentKind::GammaSweep;
    s.solver.alpha = 0.5;
    s.solver.beta = 1.0;
    s.solver.grid = Grid(1, 512, 16.0);
    s.solver.horizon = 50.0;
    s.solver.steps = 400;
    s.bump_radius = 1.0;
    return s;
}

void fujita(Outcome& o)
{
    ExperimentSpec s = fujita_spec();
    s.sweep = {{1.3, 1.0}, {1.5, 1.0}, {1.8, 1.0}, {2.0, 0.01}, {2.0, 10.0}, {2.5, 0.01}, {3.0, 0.01}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_gamma_sweep(s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& r : res.reports) {
        const std::string tag = "g" + num(r.gamma) + "_A" + num(r.amplitude);
        o.note(tag, to_string(r.verdict));
        const bool sub = r.gamma < 2.0, crit = r.gamma == 2.0, small = r.amplitude < 1.0;
        if (sub || (crit && !small))
            o.require(r.verdict == RunVerdict::BlowupDetected && r.blowup_time && *r.blowup_time < 50.0,
                      tag + " blows up");
        else
            o.require(r.verdict == RunVerdict::NoBlowup && (crit || r.linf_nonincreasing_after_1.value_or(false)),
                      tag + " persists");
    }
    o.note("seconds", secs);
    o.require(res.consistent, "sweep partitions around gamma* = 2");
    o.require(secs < 600.0, "runtime under 10 minutes");
}

void global_decay(Outcome& o)
{
    ExperimentSpec s = fujita_spec();
    s.kind = ExperimentKind::GlobalDecay;
    s.solver.gamma = 3.0;
    s.amplitude = 0.01;
    s.fit_t_min = 1.0;
    s.fit_t_max = 20.0;
    const auto rep = run_global_decay(s, 4.0, 1.5);
    o.note("verdict", to_string(rep.verdict));
    const char* names[] = {"l1", "lp", "linf"};
    for (std::size_t q = 0; q < rep.trace_growth.size(); ++q) {
        o.note(std::string("growth_") + names[q], rep.trace_growth[q]);
        o.require(rep.trace_growth[q] <= 5.0, std::string("weighted ") + names[q] + " within 5x");
    }
    o.require(rep.trace_growth.size() == 3, "three weighted traces");
    o.require(rep.weighted_linf_nonincreasing.value_or(false), "weighted L-infinity trace non-growing");
}

void positivity(Outcome& o)
{
    SolverConfig c;
    c.alpha = 0.5;
    c.beta = 1.0;
    c.gamma = 2.0;
    c.grid = Grid(1, 256, 16.0);
    c.horizon = 10.0;
    c.steps = 200;
    c.nonlinearity = NonlinearityKind::Truncated;
    const Field u0 = bump(c.grid, 1.0, 1.0);
    c.truncation = 4;
    const auto a = positivity_run(c, u0);
    c.truncation = 8;
    const auto b = positivity_run(c, u0);
    double min_seen = 0.0, excess = -1e300;
    std::size_t compared = 0;
    for (const auto* tr : {&a, &b})
        for (const auto& l : tr->levels) min_seen = std::min(min_seen, l.min);
    for (std::size_t k = 0; k < b.size(); ++k) {
        const auto it = std::lower_bound(a.times.begin(), a.times.end(), b.times[k]);
        if (it == a.times.end() || *it != b.times[k]) continue;
        const auto& fa = a.fields[std::size_t(it - a.times.begin())];
        for (std::size_t i = 0; i < fa.values.size(); ++i) excess = std::max(excess, b.fields[k].values[i] - fa.values[i]);
        ++compared;
    }
    o.note("min", min_seen);
    o.note("max_u8_minus_u4", excess);
    o.note("common_levels", compared);
    o.require(min_seen >= -1e-8, "non-negative");
    o.require(compared > 10 && excess <= 1e-6, "u_8 <= u_4 pointwise");
}

void determinism(Outcome& o)
{
    SolverConfig c;
    c.alpha = 0.5;
    c.beta = 1.0;
    c.gamma = 1.5;
    c.grid = Grid(1, 256, 16.0);
    c.horizon = 50.0;
    c.steps = 200;
    const Field u0 = bump(c.grid, 1.0, 1.0);
    auto bytes = [](const Trajectory& tr) {
        std::string s;
        for (const auto& f : tr.fields) s += io::field_bytes(f);
        return s + tr.metadata().dump();
    };
    const auto a = mild_solve(c, u0);
    c.jobs = 2;
    const auto b = mild_solve(c, u0);
    o.require(bytes(a) == bytes(b), "repeat runs byte-identical");

    c.jobs = 1;
    c.steps = 400;
    const auto fine = mild_solve(c, u0);
    const double stop = std::min(a.stop_time.value_or(c.horizon), fine.stop_time.value_or(c.horizon));
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t k = 1; k < a.size(); ++k) {
        if (a.times[k] > 0.8 * stop) break;
        const auto it = std::lower_bound(fine.times.begin(), fine.times.end(), a.times[k]);
        if (it == fine.times.end() || *it != a.times[k]) continue;
        const double lf = fine.levels[std::size_t(it - fine.times.begin())].linf;
        worst = std::max(worst, std::abs(lf - a.levels[k].linf) / lf);
        ++compared;
    }
    o.note("blowup_time", stop);
    o.note("checkpoints", compared);
    o.note("max_rel_linf_change", worst);
    o.require(compared > 10 && worst <= 0.01, "halving the mesh changes L-infinity by <= 1%");
}

}  // namespace

int main()
{
    std::cout.precision(4);
    Cli cli;
    bool cli_ran = false;
    auto estimates = [&]() -> const Cli& {
        if (!cli_ran) cli = run_default_matrix();
        cli_ran = true;
        return cli;
    };
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"special functions", special_functions},
        {"kernel normalizations", normalizations},
        {"subordination equals Fourier form", subordination_vs_fourier},
        {"Y = d/dt (g_alpha * Z)", yz_relation},
        {"two-sided estimates with negative controls", [&](Outcome& o) { two_sided(o, estimates()); }},
        {"Gaussian lower bounds", [&](Outcome& o) { gaussian(o, estimates()); }},
        {"approximate identity", approximate_identity},
        {"solver oracle, linear mode, a priori bound", solver_oracle},
        {"Fujita dichotomy", fujita},
        {"global decay", global_decay},
        {"positivity and monotonicity in n", positivity},
        {"determinism and mesh stability", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
                  << secs << " s):" << o.detail.str() << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
