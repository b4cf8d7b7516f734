#pragma once

// Estimate suite: kernel tables over a case matrix and the checks run on them.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdlab/estimates.hpp"
#include "fdlab/io.hpp"
#include "fdlab/subkernels.hpp"

namespace fdlab {

/// Geometric ladder whose kernel scale t^(alpha/beta) spans [2h, L/4].
inline std::vector<double> estimate_ladder(double alpha, double beta, const Grid& g, double ratio = 1.2)
{
    const double t0 = std::pow(2.0 * g.h(), beta / alpha);
    const double t1 = std::pow(g.L / 4.0, beta / alpha);
    const int count = static_cast<int>(std::ceil(std::log(t1 / t0) / std::log(ratio))) + 1;
    return geometric_ladder(t0, ratio, count);
}

inline SpectralMeasure default_measure(int d)
{
    return d == 1 ? SpectralMeasure::symmetric_atoms(1.0) : SpectralMeasure::uniform_circle(1.0);
}

enum class CheckKind { TwoSided, TimeIncrements, SpaceIncrements, ShiftBound, GaussianLower };

inline const char* to_string(CheckKind c)
{
    switch (c) {
    case CheckKind::TwoSided: return "two_sided";
    case CheckKind::TimeIncrements: return "increments_time";
    case CheckKind::SpaceIncrements: return "increments_space";
    case CheckKind::ShiftBound: return "shift_bound";
    case CheckKind::GaussianLower: return "gaussian_lower_bound";
    }
    return "?";
}

struct CheckSpec {
    CheckKind kind;
    KernelKind kernel = KernelKind::Z;
};

struct MatrixRow {
    std::string name;
    int d = 1;
    int n = 1024;
    double L = 64.0;
    double alpha = 0.6;
    double beta = 1.5;
    int alias_images = 0;
    std::vector<CheckSpec> checks;

    nlohmann::json to_json() const
    {
        nlohmann::json c = nlohmann::json::array();
        for (const auto& x : checks) c.push_back({{"check", to_string(x.kind)}, {"kernel", to_string(x.kernel)}});
        return {{"name", name},   {"d", d},         {"n", n},
                {"L", L},         {"alpha", alpha}, {"beta", beta},
                {"alias_images", alias_images},    {"checks", c}};
    }
};

/// One row per case of the two-sided estimates reachable with d <= 2, plus
/// increments, the shift bound and the Gaussian lower bounds.
inline std::vector<MatrixRow> default_estimate_matrix()
{
    using CK = CheckKind;
    using KK = KernelKind;
    return {
        {"d1_b1.5", 1, 1024, 64.0, 0.6, 1.5, 0,
         {{CK::TwoSided, KK::Z}, {CK::TwoSided, KK::Y}, {CK::TimeIncrements, KK::Z}, {CK::TimeIncrements, KK::Y},
          {CK::SpaceIncrements, KK::Z}, {CK::SpaceIncrements, KK::Y}, {CK::ShiftBound, KK::Y}}},
        {"d1_b1.0", 1, 1024, 64.0, 0.6, 1.0, 0, {{CK::TwoSided, KK::Z}, {CK::TwoSided, KK::Y}}},
        {"d2_b1.5", 2, 512, 16.0, 0.6, 1.5, 2, {{CK::TwoSided, KK::Z}}},
        {"d2_b1.0", 2, 512, 16.0, 0.4, 1.0, 2, {{CK::TwoSided, KK::Y}}},
        {"d2_b0.8", 2, 512, 16.0, 0.6, 0.8, 3, {{CK::TwoSided, KK::Y}}},
        {"gauss_b0.8", 1, 1024, 64.0, 0.4, 0.8, 0, {{CK::GaussianLower, KK::Z}, {CK::GaussianLower, KK::Y}}},
        {"gauss_b1.0", 1, 1024, 64.0, 0.5, 1.0, 0, {{CK::GaussianLower, KK::Z}, {CK::GaussianLower, KK::Y}}},
    };
}

struct SuiteEntry {
    std::string row;
    EstimateReport report;
    /// Two-sided checks only: the same check against exponents scaled by 1.2.
    std::optional<EstimateReport> control;

    bool ok() const { return report.pass() && (!control || control->verdict == Verdict::Fail); }

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"row", row}, {"report", report.to_json()}, {"ok", ok()}};
        if (control) j["negative_control"] = control->to_json();
        return j;
    }
};

struct SuiteResult {
    std::vector<SuiteEntry> entries;
    std::vector<nlohmann::json> table_checks;

    /// Pass, Fail, or Inconclusive when nothing failed but something was inconclusive.
    Verdict verdict() const
    {
        bool inconclusive = false;
        for (const auto& e : entries) {
            if (e.report.verdict == Verdict::Inconclusive) {
                inconclusive = true;
                continue;
            }
            if (!e.ok()) return Verdict::Fail;
        }
        return inconclusive ? Verdict::Inconclusive : Verdict::Pass;
    }

    std::vector<EstimateReport> reports() const
    {
        std::vector<EstimateReport> out;
        for (const auto& e : entries) out.push_back(e.report);
        return out;
    }

    io::CsvTable summary() const
    {
        io::CsvTable tab({"row", "check", "case", "verdict", "negative_control", "samples", "fitted_constant",
                          "constant_spread"});
        for (const auto& e : entries) {
            const auto& r = e.report;
            tab.add_row({e.row, r.check, r.case_label, to_string(r.verdict),
                         e.control ? to_string(e.control->verdict) : "n/a", std::to_string(r.sample_count),
                         io::fmt(r.fitted_constant), io::fmt(r.constant_spread)});
        }
        return tab;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json es = nlohmann::json::array();
        for (const auto& e : entries) es.push_back(e.to_json());
        return {{"verdict", to_string(verdict())}, {"entries", es}, {"tables", table_checks}};
    }
};

inline KernelTable build_row_table(const MatrixRow& row, int jobs)
{
    const Grid g(row.d, row.n, row.L);
    const StableSymbol sym(row.beta, default_measure(row.d));
    KernelOptions ko;
    ko.alias_images = row.alias_images;
    return KernelTable::build(sym, row.alpha, g, estimate_ladder(row.alpha, row.beta, g), ko, jobs);
}

inline void run_row_checks(const MatrixRow& row, const KernelTable& tab, SuiteResult& out)
{
    for (const auto& c : row.checks) {
        SuiteEntry e;
        e.row = row.name;
        switch (c.kind) {
        case CheckKind::TwoSided: {
            e.report = verify_two_sided(tab, c.kernel);
            const auto wrong = perturbed(shape_spec(c.kernel, row.alpha, row.beta, row.d), 1.2);
            e.control = verify_two_sided(tab, c.kernel, {}, &wrong);
            break;
        }
        case CheckKind::TimeIncrements: e.report = verify_increments(tab, c.kernel, IncrementMode::Time); break;
        case CheckKind::SpaceIncrements: e.report = verify_increments(tab, c.kernel, IncrementMode::Space); break;
        case CheckKind::ShiftBound: {
            const std::array<int, 2> x1{0, 0};
            const std::array<int, 2> x2{1, 0};
            e.report = verify_shift_bound(tab, x1, x2);
            break;
        }
        case CheckKind::GaussianLower: e.report = gaussian_lower_bound(tab, c.kernel); break;
        }
        out.entries.push_back(std::move(e));
    }
}

inline SuiteResult run_estimate_suite(const std::vector<MatrixRow>& rows, int jobs = 1)
{
    SuiteResult out;
    for (const auto& row : rows) {
        const KernelTable tab = build_row_table(row, jobs);
        nlohmann::json tj = row.to_json();
        tj["times"] = tab.size();
        tj["invariants"] = tab.invariant_report();
        out.table_checks.push_back(std::move(tj));
        run_row_checks(row, tab, out);
    }
    return out;
}

}  // namespace fdlab
