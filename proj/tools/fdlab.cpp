#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fdlab/config.hpp"
#include "fdlab/experiments.hpp"
#include "fdlab/io.hpp"
#include "fdlab/solver.hpp"
#include "fdlab/subkernels.hpp"
#include "fdlab/suite.hpp"

namespace fs = std::filesystem;
using namespace fdlab;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kFail = 2;
constexpr int kInconclusive = 3;

/// Everything a subcommand produces, held in memory until the run succeeds.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> dirs;
    nlohmann::json summary = nlohmann::json::object();
    int status = kPass;

    void text(std::string name, std::string body) { files.emplace_back(std::move(name), std::move(body)); }
    void json(std::string name, const nlohmann::json& j) { text(std::move(name), j.dump(2) + "\n"); }
    void csv(std::string name, const io::CsvTable& t) { text(std::move(name), t.str()); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

int verdict_status(Verdict v)
{
    switch (v) {
    case Verdict::Pass: return kPass;
    case Verdict::Fail: return kFail;
    case Verdict::Inconclusive: return kInconclusive;
    }
    return kError;
}

void add_snapshots(Outputs& out, const Trajectory& tr, const std::vector<double>& times, const std::string& prefix)
{
    nlohmann::json index = nlohmann::json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < tr.times.front() || times[i] > tr.times.back()) {
            index.push_back({{"requested", times[i]}, {"file", nullptr}});
            continue;
        }
        const std::size_t k = tr.level_at(times[i]);
        const std::string name = prefix + "snapshot_" + std::to_string(i) + ".fdf";
        out.text(name, io::field_bytes(tr.fields[k]));
        index.push_back({{"requested", times[i]}, {"t", tr.times[k]}, {"file", name}});
    }
    if (!times.empty()) out.json(prefix + "snapshots.json", index);
}

io::CsvTable level_table(const Trajectory& tr)
{
    io::CsvTable tab({"t", "l1", "lp", "linf", "min", "mass", "picard_iterations", "picard_residual"});
    for (const auto& l : tr.levels)
        tab.add_row({io::fmt(l.t), io::fmt(l.l1), io::fmt(l.lp), io::fmt(l.linf), io::fmt(l.min), io::fmt(l.mass),
                     std::to_string(l.picard_iterations), io::fmt(l.picard_residual)});
    return tab;
}

Outputs run_kernels(const RunConfig& cfg)
{
    Outputs out;
    const StableSymbol sym(cfg.beta, cfg.spectral_measure());
    KernelOptions ko;
    ko.alias_images = cfg.alias_images;
    auto table = std::make_shared<KernelTable>(
        KernelTable::build(sym, cfg.alpha, cfg.grid, cfg.kernel_times, ko, static_cast<unsigned>(cfg.jobs)));
    const auto inv = table->invariant_report();
    nlohmann::json report{{"invariants", inv}};
    bool ok = inv.at("pass").get<bool>();

    const auto& t = table->times();
    bool ladder_ok = t.size() >= 3;
    for (std::size_t i = 1; i < t.size(); ++i) ladder_ok = ladder_ok && t[i] / t[i - 1] <= 1.2 + 1e-12;
    if (ladder_ok) {
        const auto probes = omega_probes(cfg.grid, cfg.alpha, cfg.beta, t[t.size() / 2], {0.5, 1.0, 10.0});
        const auto yz = verify_yz_relation(*table, probes);
        report["yz_relation"] = yz.to_json();
        ok = ok && yz.pass;
    } else {
        report["yz_relation"] = "skipped: needs at least three times with ratio <= 1.2";
    }
    report["pass"] = ok;
    out.json("kernels_report.json", report);
    out.dirs.emplace_back("table", [table](const fs::path& dir) { table->export_to(dir); });
    out.summary = {{"pass", ok}, {"times", t.size()}};
    out.status = ok ? kPass : kFail;
    return out;
}

Outputs run_verify(const RunConfig& cfg)
{
    Outputs out;
    const auto res = run_estimate_suite(cfg.estimate_rows(), cfg.jobs);
    out.json("estimates.json", res.to_json());
    out.csv("estimates_summary.csv", res.summary());
    out.summary = {{"verdict", to_string(res.verdict())}, {"checks", res.entries.size()}};
    out.status = verdict_status(res.verdict());
    return out;
}

Outputs run_solve(const RunConfig& cfg)
{
    Outputs out;
    SolverConfig sc = cfg.solver;
    sc.jobs = cfg.jobs;
    const Field u0 = bump(sc.grid, cfg.amplitude, cfg.radius);
    const Trajectory tr = mild_solve(sc, u0);
    out.csv("trajectory.csv", level_table(tr));
    out.json("run.json", tr.metadata());
    add_snapshots(out, tr, cfg.snapshot_times, "");
    out.summary = {{"status", to_string(tr.status)}, {"final_time", tr.times.back()}, {"levels", tr.size()}};
    return out;
}

Outputs run_sweep(const RunConfig& cfg)
{
    Outputs out;
    const auto res = run_gamma_sweep(cfg.experiment(ExperimentKind::GammaSweep));
    out.json("sweep.json", res.to_json());
    out.csv("sweep_summary.csv", res.summary());
    for (std::size_t i = 0; i < res.reports.size(); ++i)
        out.csv("traces_" + std::to_string(i) + ".csv", res.reports[i].traces());
    bool inconclusive = false;
    for (const auto& r : res.reports) inconclusive = inconclusive || r.verdict == RunVerdict::Inconclusive;
    out.summary = {{"consistent", res.consistent}, {"runs", res.reports.size()}};
    out.status = !res.consistent ? kFail : inconclusive ? kInconclusive : kPass;
    return out;
}

Outputs run_decay(const RunConfig& cfg)
{
    Outputs out;
    const auto rep = run_global_decay(cfg.experiment(ExperimentKind::GlobalDecay), cfg.p, cfg.p_prime);
    out.json("decay.json", rep.to_json());
    out.csv("decay_traces.csv", rep.traces());
    out.summary = {{"verdict", to_string(rep.verdict)}};
    out.status = rep.verdict == RunVerdict::DecayConfirmed ? kPass
                 : rep.verdict == RunVerdict::Inconclusive ? kInconclusive
                                                           : kFail;
    return out;
}

void write_outputs(const fs::path& dir, const RunConfig& cfg, const Outputs& out)
{
    fs::create_directories(dir);
    nlohmann::json files = nlohmann::json::object();
    for (const auto& [name, body] : out.files) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        os << body;
        if (!os) throw std::runtime_error("write failed for " + (dir / name).string());
        files[name] = io::content_hash(body);
    }
    for (const auto& [name, writer] : out.dirs) {
        writer(dir / name);
        std::vector<fs::path> inner;
        for (const auto& e : fs::recursive_directory_iterator(dir / name))
            if (e.is_regular_file()) inner.push_back(e.path());
        std::sort(inner.begin(), inner.end());
        for (const auto& p : inner) files[fs::relative(p, dir).generic_string()] = io::content_hash(slurp(p));
    }
    const nlohmann::json manifest{{"command", to_string(cfg.command)},
                                  {"config_hash", cfg.hash},
                                  {"config", cfg.to_json()},
                                  {"files", files},
                                  {"summary", out.summary},
                                  {"exit_status", out.status}};
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write manifest");
}

void report_error(const std::string& kind, const std::string& what, const std::vector<std::string>& details = {})
{
    nlohmann::json j{{"error", kind}, {"message", what}};
    if (!details.empty()) j["details"] = details;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fdlab: fractional diffusion kernels, estimates and semilinear experiments"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    std::vector<double> snapshots;
    for (const char* name : {"kernels", "verify-estimates", "solve", "fujita-sweep", "decay"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--snapshot-times", snapshots, "field snapshot times")->delimiter(',');
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kError;
    }

    try {
        const Command cmd = parse_command(app.get_subcommands().front()->get_name());
        RunConfig cfg = parse_config(slurp(config_path), cmd);
        cfg.jobs = jobs;
        cfg.snapshot_times = snapshots;

        Outputs out;
        switch (cmd) {
        case Command::Kernels: out = run_kernels(cfg); break;
        case Command::VerifyEstimates: out = run_verify(cfg); break;
        case Command::Solve: out = run_solve(cfg); break;
        case Command::FujitaSweep: out = run_sweep(cfg); break;
        case Command::Decay: out = run_decay(cfg); break;
        }
        write_outputs(out_dir, cfg, out);
        std::cout << out.summary.dump() << "\n";
        return out.status;
    } catch (const ConfigError& e) {
        report_error("config", e.what(), e.errors());
    } catch (const SolverError& e) {
        nlohmann::json j{{"error", "solver"}, {"message", e.what()}, {"diagnostics", e.diagnostics()}};
        std::cerr << j.dump() << "\n";
    } catch (const std::exception& e) {
        report_error("runtime", e.what());
    }
    return kError;
}
