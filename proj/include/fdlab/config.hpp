#pragma once

// Plain-text run configuration: `[section]` headers and `key = value` lines.

#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/experiments.hpp"
#include "fdlab/io.hpp"
#include "fdlab/solver.hpp"
#include "fdlab/suite.hpp"

namespace fdlab {

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : std::invalid_argument(join(errors)), errors_(std::move(errors))
    {
    }
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& e)
    {
        std::string s;
        for (const auto& x : e) s += (s.empty() ? "" : "; ") + x;
        return s;
    }
    std::vector<std::string> errors_;
};

enum class Command { Kernels, VerifyEstimates, Solve, FujitaSweep, Decay };

inline const char* to_string(Command c)
{
    switch (c) {
    case Command::Kernels: return "kernels";
    case Command::VerifyEstimates: return "verify-estimates";
    case Command::Solve: return "solve";
    case Command::FujitaSweep: return "fujita-sweep";
    case Command::Decay: return "decay";
    }
    return "?";
}

inline Command parse_command(const std::string& s)
{
    for (Command c : {Command::Kernels, Command::VerifyEstimates, Command::Solve, Command::FujitaSweep,
                      Command::Decay})
        if (s == to_string(c)) return c;
    throw std::invalid_argument("unknown subcommand '" + s + "'");
}

struct RunConfig {
    Command command = Command::Solve;
    Grid grid{1, 512, 16.0};
    std::optional<SpectralMeasure> measure;
    double alpha = 0.5;
    double beta = 1.0;
    double gamma = 2.0;

    std::vector<double> kernel_times;
    int alias_images = 0;

    SolverConfig solver;
    double amplitude = 1.0;
    double radius = 1.0;
    std::vector<SweepPoint> sweep;

    double p = 4.0;
    double p_prime = 1.5;
    double fit_t_min = 1.0;
    double fit_t_max = 20.0;

    std::string matrix = "default";
    std::vector<CheckSpec> checks;

    std::vector<double> snapshot_times;
    int jobs = 1;
    /// Hash of the normalized configuration text.
    std::string hash;

    const SpectralMeasure& spectral_measure() const { return *measure; }

    std::vector<MatrixRow> estimate_rows() const
    {
        if (matrix == "default") return default_estimate_matrix();
        return {{"single", grid.dim, grid.n, grid.L, alpha, beta, alias_images, checks}};
    }

    ExperimentSpec experiment(ExperimentKind kind) const
    {
        ExperimentSpec e;
        e.kind = kind;
        e.solver = solver;
        e.amplitude = amplitude;
        e.bump_radius = radius;
        e.sweep = sweep;
        e.fit_t_min = fit_t_min;
        e.fit_t_max = fit_t_max;
        e.jobs = jobs;
        return e;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json sw = nlohmann::json::array();
        for (const auto& s : sweep) sw.push_back({{"gamma", s.gamma}, {"amplitude", s.amplitude}});
        nlohmann::json ck = nlohmann::json::array();
        for (const auto& c : checks) ck.push_back({{"check", to_string(c.kind)}, {"kernel", to_string(c.kernel)}});
        return {{"command", to_string(command)},
                {"grid", grid.to_json()},
                {"measure", measure ? measure->descriptor() : nlohmann::json()},
                {"model", {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}}},
                {"kernels", {{"times", kernel_times}, {"alias_images", alias_images}}},
                {"solver", solver.to_json()},
                {"data", {{"amplitude", amplitude}, {"radius", radius}}},
                {"sweep", sw},
                {"decay", {{"p", p}, {"p_prime", p_prime}, {"t_min", fit_t_min}, {"t_max", fit_t_max}}},
                {"estimates", {{"matrix", matrix}, {"checks", ck}}},
                {"snapshot_times", snapshot_times},
                {"hash", hash}};
    }
};

namespace detail {

struct Entry {
    std::string value;
    int line;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

inline const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s{
        {"grid", {"dim", "n", "L"}},
        {"measure", {"kind", "mass", "w_plus", "w_minus", "eps"}},
        {"model", {"alpha", "beta", "gamma"}},
        {"kernels", {"times", "ladder", "alias_images"}},
        {"solver",
         {"horizon", "steps", "grading", "picard_tol", "picard_max_iter", "nonlinearity", "truncation",
          "guard_factor", "norm_p", "max_halvings"}},
        {"data", {"amplitude", "radius"}},
        {"sweep", {"points"}},
        {"decay", {"p", "p_prime", "t_min", "t_max"}},
        {"estimates", {"matrix", "checks"}},
    };
    return s;
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

inline Sections tokenize(const std::string& text, std::vector<std::string>& errors)
{
    Sections out;
    std::istringstream is(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        const auto where = "line " + std::to_string(line) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']') {
                errors.push_back(where + "malformed section header");
                continue;
            }
            section = trim(s.substr(1, s.size() - 2));
            if (!schema().count(section)) errors.push_back(where + "unknown section [" + section + "]");
            else if (out.count(section)) errors.push_back(where + "duplicate section [" + section + "]");
            out[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            errors.push_back(where + "expected key = value");
            continue;
        }
        if (section.empty()) {
            errors.push_back(where + "key outside of any section");
            continue;
        }
        const std::string key = trim(s.substr(0, eq));
        const auto& allowed = schema().find(section);
        if (allowed == schema().end()) continue;
        if (!allowed->second.count(key)) {
            errors.push_back(where + "unknown key '" + key + "' in [" + section + "]");
            continue;
        }
        if (out[section].count(key)) {
            errors.push_back(where + "duplicate key '" + key + "'");
            continue;
        }
        out[section][key] = {trim(s.substr(eq + 1)), line};
    }
    return out;
}

class Reader {
public:
    Reader(const Sections& s, std::vector<std::string>& errors) : s_(s), errors_(errors) {}

    bool has(const std::string& sec) const { return s_.count(sec) > 0; }

    const Entry* find(const std::string& sec, const std::string& key) const
    {
        auto it = s_.find(sec);
        if (it == s_.end()) return nullptr;
        auto jt = it->second.find(key);
        return jt == it->second.end() ? nullptr : &jt->second;
    }

    int line(const std::string& sec, const std::string& key) const
    {
        const Entry* e = find(sec, key);
        return e ? e->line : 0;
    }

    void error(const std::string& sec, const std::string& key, const std::string& msg)
    {
        const int ln = line(sec, key);
        errors_.push_back((ln ? "line " + std::to_string(ln) + ": " : std::string()) + "[" + sec + "] " + key + ": " +
                          msg);
    }

    static std::optional<double> to_double(const std::string& v)
    {
        double x = 0.0;
        const auto* end = v.data() + v.size();
        auto [p, ec] = std::from_chars(v.data(), end, x);
        if (ec != std::errc() || p != end) return std::nullopt;
        return x;
    }

    void real(const std::string& sec, const std::string& key, double& out)
    {
        const Entry* e = find(sec, key);
        if (!e) return;
        if (auto x = to_double(e->value)) out = *x;
        else error(sec, key, "expected a number, got '" + e->value + "'");
    }

    void integer(const std::string& sec, const std::string& key, int& out)
    {
        const Entry* e = find(sec, key);
        if (!e) return;
        int x = 0;
        const auto* end = e->value.data() + e->value.size();
        auto [p, ec] = std::from_chars(e->value.data(), end, x);
        if (ec != std::errc() || p != end) error(sec, key, "expected an integer, got '" + e->value + "'");
        else out = x;
    }

    void word(const std::string& sec, const std::string& key, std::string& out)
    {
        if (const Entry* e = find(sec, key)) out = e->value;
    }

    std::vector<double> reals(const std::string& sec, const std::string& key)
    {
        std::vector<double> out;
        const Entry* e = find(sec, key);
        if (!e) return out;
        for (const auto& item : split(e->value, ',')) {
            if (auto x = to_double(item)) out.push_back(*x);
            else error(sec, key, "expected a number, got '" + item + "'");
        }
        return out;
    }

private:
    const Sections& s_;
    std::vector<std::string>& errors_;
};

inline void require_sections(const Reader& r, Command cmd, const RunConfig& cfg, std::vector<std::string>& errors)
{
    std::vector<std::string> need;
    switch (cmd) {
    case Command::Kernels: need = {"grid", "model", "kernels"}; break;
    case Command::VerifyEstimates:
        need = {"estimates"};
        if (cfg.matrix == "single") need.insert(need.end(), {"grid", "model"});
        break;
    case Command::Solve: need = {"grid", "model"}; break;
    case Command::FujitaSweep: need = {"grid", "model", "sweep"}; break;
    case Command::Decay: need = {"grid", "model", "decay"}; break;
    }
    for (const auto& s : need)
        if (!r.has(s)) errors.push_back("missing required section [" + s + "] for " + to_string(cmd));
}

inline std::optional<CheckSpec> parse_check(const std::string& item)
{
    const auto parts = split(item, ':');
    if (parts.size() != 2 || (parts[1] != "Z" && parts[1] != "Y")) return std::nullopt;
    const KernelKind k = parts[1] == "Z" ? KernelKind::Z : KernelKind::Y;
    static const std::map<std::string, CheckKind> names{{"two_sided", CheckKind::TwoSided},
                                                        {"increments_time", CheckKind::TimeIncrements},
                                                        {"increments_space", CheckKind::SpaceIncrements},
                                                        {"shift_bound", CheckKind::ShiftBound},
                                                        {"gaussian_lower_bound", CheckKind::GaussianLower}};
    auto it = names.find(parts[0]);
    if (it == names.end()) return std::nullopt;
    return CheckSpec{it->second, k};
}

}  // namespace detail

/// Parse and validate a configuration for one subcommand. Throws ConfigError
/// listing every problem found, each prefixed by its line where one applies.
inline RunConfig parse_config(const std::string& text, Command cmd)
{
    std::vector<std::string> errors;
    const auto sections = detail::tokenize(text, errors);
    detail::Reader r(sections, errors);
    RunConfig cfg;
    cfg.command = cmd;

    r.word("estimates", "matrix", cfg.matrix);
    if (cfg.matrix != "default" && cfg.matrix != "single")
        r.error("estimates", "matrix", "must be 'default' or 'single'");
    detail::require_sections(r, cmd, cfg, errors);

    int dim = 1, n = 512;
    double L = 16.0;
    r.integer("grid", "dim", dim);
    r.integer("grid", "n", n);
    r.real("grid", "L", L);
    try {
        cfg.grid = Grid(dim, n, L);
    } catch (const std::invalid_argument& e) {
        errors.push_back("[grid] " + std::string(e.what()));
    }

    if (r.has("model") && !r.find("model", "alpha")) errors.push_back("[model] alpha is required");
    if (r.has("model") && !r.find("model", "beta")) errors.push_back("[model] beta is required");
    r.real("model", "alpha", cfg.alpha);
    r.real("model", "beta", cfg.beta);
    r.real("model", "gamma", cfg.gamma);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) r.error("model", "alpha", "must lie in (0,1)");
    if (!(cfg.beta > 0.0 && cfg.beta < 2.0)) r.error("model", "beta", "must lie in (0,2)");
    if (!(cfg.gamma > 1.0)) r.error("model", "gamma", "must be > 1");

    std::string kind = cfg.grid.dim == 1 ? "symmetric_atoms" : "uniform_circle";
    double mass = 1.0, w_plus = 0.5, w_minus = 0.5, eps = 0.5;
    r.word("measure", "kind", kind);
    r.real("measure", "mass", mass);
    r.real("measure", "w_plus", w_plus);
    r.real("measure", "w_minus", w_minus);
    r.real("measure", "eps", eps);
    try {
        if (kind == "symmetric_atoms") cfg.measure = SpectralMeasure::symmetric_atoms(mass);
        else if (kind == "two_atom") cfg.measure = SpectralMeasure::two_atom(w_plus, w_minus);
        else if (kind == "uniform_circle") cfg.measure = SpectralMeasure::uniform_circle(mass);
        else if (kind == "cosine_circle") cfg.measure = SpectralMeasure::cosine_circle(mass, eps);
        else r.error("measure", "kind", "unknown measure '" + kind + "'");
        if (cfg.measure && cfg.measure->dim() != cfg.grid.dim)
            r.error("measure", "kind", "measure dimension does not match [grid] dim");
    } catch (const std::invalid_argument& e) {
        errors.push_back("[measure] " + std::string(e.what()));
    }

    r.integer("kernels", "alias_images", cfg.alias_images);
    if (cfg.alias_images < 0) r.error("kernels", "alias_images", "must be >= 0");
    cfg.kernel_times = r.reals("kernels", "times");
    if (const auto lad = r.reals("kernels", "ladder"); !lad.empty()) {
        if (!cfg.kernel_times.empty()) r.error("kernels", "ladder", "give either times or ladder, not both");
        else if (lad.size() != 3 || !(lad[0] > 0.0 && lad[1] > 1.0 && lad[2] >= 1.0))
            r.error("kernels", "ladder", "expected 't0, ratio, count' with t0 > 0, ratio > 1, count >= 1");
        else cfg.kernel_times = geometric_ladder(lad[0], lad[1], static_cast<int>(lad[2]));
    }
    if (cmd == Command::Kernels && cfg.kernel_times.empty())
        errors.push_back("[kernels] times or ladder is required");
    for (double t : cfg.kernel_times)
        if (!(t > 0.0)) r.error("kernels", "times", "times must be positive");

    auto& s = cfg.solver;
    s.alpha = cfg.alpha;
    s.beta = cfg.beta;
    s.gamma = cfg.gamma;
    s.grid = cfg.grid;
    if (cfg.measure) s.measure = *cfg.measure;
    r.real("solver", "horizon", s.horizon);
    r.integer("solver", "steps", s.steps);
    r.real("solver", "grading", s.grading);
    r.real("solver", "picard_tol", s.picard_tol);
    r.integer("solver", "picard_max_iter", s.picard_max_iter);
    r.integer("solver", "truncation", s.truncation);
    r.real("solver", "guard_factor", s.guard_factor);
    r.real("solver", "norm_p", s.norm_p);
    r.integer("solver", "max_halvings", s.max_halvings);
    std::string nl = "power";
    r.word("solver", "nonlinearity", nl);
    if (nl == "power") s.nonlinearity = NonlinearityKind::Power;
    else if (nl == "truncated") s.nonlinearity = NonlinearityKind::Truncated;
    else if (nl == "none") s.nonlinearity = NonlinearityKind::None;
    else r.error("solver", "nonlinearity", "must be power, truncated or none");

    r.real("data", "amplitude", cfg.amplitude);
    r.real("data", "radius", cfg.radius);
    if (!(cfg.amplitude >= 0.0)) r.error("data", "amplitude", "must be >= 0");
    if (!(cfg.radius > 0.0)) r.error("data", "radius", "must be > 0");

    if (const auto* e = r.find("sweep", "points")) {
        for (const auto& item : detail::split(e->value, ',')) {
            const auto parts = detail::split(item, ':');
            std::optional<double> g, a;
            if (parts.size() == 2) {
                g = detail::Reader::to_double(parts[0]);
                a = detail::Reader::to_double(parts[1]);
            }
            if (!g || !a) r.error("sweep", "points", "expected gamma:amplitude, got '" + item + "'");
            else if (!(*g > 1.0)) r.error("sweep", "points", "gamma must be > 1");
            else cfg.sweep.push_back({*g, *a});
        }
        if (cfg.sweep.empty()) r.error("sweep", "points", "no sweep points");
        std::stable_sort(cfg.sweep.begin(), cfg.sweep.end(),
                         [](const SweepPoint& x, const SweepPoint& y) { return x.gamma < y.gamma; });
    } else if (r.has("sweep")) {
        errors.push_back("[sweep] points is required");
    }

    r.real("decay", "p", cfg.p);
    r.real("decay", "p_prime", cfg.p_prime);
    r.real("decay", "t_min", cfg.fit_t_min);
    r.real("decay", "t_max", cfg.fit_t_max);

    if (const auto* e = r.find("estimates", "checks")) {
        for (const auto& item : detail::split(e->value, ',')) {
            if (auto c = detail::parse_check(item)) cfg.checks.push_back(*c);
            else r.error("estimates", "checks", "unknown check '" + item + "' (use name:Z or name:Y)");
        }
    }
    if (cmd == Command::VerifyEstimates && cfg.matrix == "single" && cfg.checks.empty())
        errors.push_back("[estimates] checks is required when matrix = single");

    if (errors.empty() && (cmd == Command::Solve || cmd == Command::FujitaSweep || cmd == Command::Decay)) {
        try {
            if (cmd == Command::Decay) cfg.experiment(ExperimentKind::GlobalDecay).validate();
            else cfg.solver.validate();
        } catch (const std::invalid_argument& e) {
            errors.push_back(e.what());
        }
    }
    if (!errors.empty()) throw ConfigError(errors);

    std::ostringstream norm;
    for (const auto& [sec, kv] : sections) {
        norm << '[' << sec << "]\n";
        for (const auto& [k, v] : kv) norm << k << '=' << v.value << '\n';
    }
    cfg.hash = io::content_hash(norm.str());
    return cfg;
}

}  // namespace fdlab
