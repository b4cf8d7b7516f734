#include <string>

#include <gtest/gtest.h>

#include "fdlab/config.hpp"

using namespace fdlab;

namespace {

const std::string kMinimal = R"(
[grid]
n = 256
L = 16

[model]
alpha = 0.5
beta = 1.0
gamma = 1.5
)";

std::vector<std::string> errors_of(const std::string& text, Command cmd)
{
    try {
        parse_config(text, cmd);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& errs, const std::string& needle)
{
    for (const auto& e : errs)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(ParseConfig, MinimalBlowupConfigFillsDefaults)
{
    const auto cfg = parse_config(kMinimal, Command::Solve);
    EXPECT_EQ(cfg.grid.dim, 1);
    EXPECT_EQ(cfg.grid.n, 256);
    EXPECT_DOUBLE_EQ(cfg.solver.gamma, 1.5);
    EXPECT_EQ(cfg.solver.steps, 400);
    EXPECT_DOUBLE_EQ(cfg.solver.guard_factor, 1e3);
    EXPECT_DOUBLE_EQ(cfg.amplitude, 1.0);
    EXPECT_EQ(cfg.spectral_measure().descriptor().at("kind"), "two-atom");
    EXPECT_EQ(cfg.hash.size(), 16u);
}

TEST(ParseConfig, HashIgnoresCommentsAndOrder)
{
    const std::string reordered = "# comment\n[model]\nbeta = 1.0\nalpha = 0.5\ngamma = 1.5 ; trailing\n[grid]\nL = 16\nn = 256\n";
    EXPECT_EQ(parse_config(kMinimal, Command::Solve).hash, parse_config(reordered, Command::Solve).hash);
    EXPECT_NE(parse_config(kMinimal, Command::Solve).hash,
              parse_config(kMinimal + "[data]\namplitude = 2\n", Command::Solve).hash);
}

TEST(ParseConfig, BetaRangeError)
{
    std::string text = kMinimal;
    text.replace(text.find("beta = 1.0"), 10, "beta = 2.5");
    const auto errs = errors_of(text, Command::Solve);
    ASSERT_FALSE(errs.empty());
    EXPECT_TRUE(any_contains(errs, "(0,2)"));
    EXPECT_TRUE(any_contains(errs, "line 8"));
}

TEST(ParseConfig, OtherRangeErrors)
{
    std::string a = kMinimal;
    a.replace(a.find("alpha = 0.5"), 11, "alpha = 1.0");
    EXPECT_TRUE(any_contains(errors_of(a, Command::Solve), "(0,1)"));
    std::string g = kMinimal;
    g.replace(g.find("gamma = 1.5"), 11, "gamma = 0.9");
    EXPECT_TRUE(any_contains(errors_of(g, Command::Solve), "> 1"));
}

TEST(ParseConfig, MissingGridSection)
{
    const auto errs = errors_of("[model]\nalpha = 0.5\nbeta = 1\n", Command::Solve);
    EXPECT_TRUE(any_contains(errs, "missing required section [grid]"));
}

TEST(ParseConfig, SchemaErrorsCarryLines)
{
    const auto errs = errors_of(kMinimal + "[solver]\nstepz = 10\nhorizon = abc\n[bogus]\n", Command::Solve);
    EXPECT_TRUE(any_contains(errs, "line 11: unknown key 'stepz'"));
    EXPECT_TRUE(any_contains(errs, "line 12"));
    EXPECT_TRUE(any_contains(errs, "unknown section [bogus]"));
    EXPECT_TRUE(any_contains(errors_of("n = 3\n", Command::Solve), "outside of any section"));
}

TEST(ParseConfig, SweepAndDecay)
{
    const auto cfg = parse_config(kMinimal + "[sweep]\npoints = 3.0:0.01, 1.3:1, 2:10\n", Command::FujitaSweep);
    ASSERT_EQ(cfg.sweep.size(), 3u);
    EXPECT_DOUBLE_EQ(cfg.sweep[0].gamma, 1.3);
    EXPECT_DOUBLE_EQ(cfg.sweep[2].amplitude, 0.01);
    EXPECT_TRUE(any_contains(errors_of(kMinimal, Command::FujitaSweep), "[sweep]"));
    EXPECT_TRUE(any_contains(errors_of(kMinimal + "[sweep]\npoints = 2-1\n", Command::FujitaSweep), "gamma:amplitude"));

    const auto d = parse_config(kMinimal + "[solver]\nhorizon = 20\n[decay]\np = 4\np_prime = 1.5\n", Command::Decay);
    EXPECT_DOUBLE_EQ(d.p, 4.0);
    EXPECT_TRUE(any_contains(errors_of(kMinimal + "[decay]\np = 4\n", Command::Decay), "horizon"));
}

TEST(ParseConfig, KernelsAndEstimates)
{
    const auto k = parse_config(kMinimal + "[kernels]\nladder = 1, 1.2, 4\nalias_images = 1\n", Command::Kernels);
    ASSERT_EQ(k.kernel_times.size(), 4u);
    EXPECT_NEAR(k.kernel_times[3], 1.728, 1e-12);
    EXPECT_TRUE(any_contains(errors_of(kMinimal + "[kernels]\n", Command::Kernels), "times or ladder"));

    const auto e = parse_config("[estimates]\nmatrix = default\n", Command::VerifyEstimates);
    EXPECT_EQ(e.estimate_rows().size(), default_estimate_matrix().size());
    const auto s = parse_config(kMinimal + "[estimates]\nmatrix = single\nchecks = two_sided:Z, shift_bound:Y\n",
                                Command::VerifyEstimates);
    ASSERT_EQ(s.estimate_rows().size(), 1u);
    EXPECT_EQ(s.estimate_rows()[0].checks.size(), 2u);
    EXPECT_TRUE(any_contains(errors_of(kMinimal + "[estimates]\nmatrix = single\nchecks = wobble:Z\n",
                                       Command::VerifyEstimates),
                             "unknown check"));
}

TEST(ParseConfig, MeasureMustMatchGrid)
{
    EXPECT_TRUE(any_contains(errors_of(kMinimal + "[measure]\nkind = uniform_circle\n", Command::Solve), "dimension"));
    const auto two = parse_config("[grid]\ndim = 2\nn = 64\nL = 8\n[model]\nalpha = 0.5\nbeta = 1\n", Command::Solve);
    EXPECT_EQ(two.spectral_measure().dim(), 2);
}

TEST(ParseConfig, Commands)
{
    EXPECT_EQ(parse_command("fujita-sweep"), Command::FujitaSweep);
    EXPECT_THROW(parse_command("sweep"), std::invalid_argument);
}
