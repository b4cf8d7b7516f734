#include <cmath>

#include <gtest/gtest.h>

#include "fdlab/experiments.hpp"
#include "fdlab/solver.hpp"
#include "fdlab/subkernels.hpp"
#include "oracles.hpp"

using namespace fdlab;

namespace {

SolverConfig small_config()
{
    SolverConfig c;
    c.alpha = 0.5;
    c.beta = 1.0;
    c.gamma = 1.5;
    c.grid = Grid(1, 128, 8.0);
    c.horizon = 0.2;
    c.steps = 100;
    return c;
}

Field constant(const Grid& g, double v)
{
    Field f(g);
    for (auto& x : f.values) x = v;
    return f;
}

}  // namespace

TEST(Truncation, Values)
{
    EXPECT_EQ(truncated_nonlinearity(2, 1.5, -3.0), 0.0);
    EXPECT_DOUBLE_EQ(truncated_nonlinearity(2, 1.5, 1.0), 1.0);
    const double a2 = std::pow(2.0, 1.5) + 1.5 * std::sqrt(2.0);
    EXPECT_NEAR(a2, 4.9497474683, 1e-9);
    EXPECT_NEAR(truncated_nonlinearity(2, 1.5, 60.0), a2, 1e-12);
    // C1 at r = n
    const double e = 1e-7;
    EXPECT_NEAR(truncated_nonlinearity(2, 1.5, 2.0 + e), truncated_nonlinearity(2, 1.5, 2.0), 1e-6);
    const double dl = (truncated_nonlinearity(2, 1.5, 2.0) - truncated_nonlinearity(2, 1.5, 2.0 - e)) / e;
    const double dr = (truncated_nonlinearity(2, 1.5, 2.0 + e) - truncated_nonlinearity(2, 1.5, 2.0)) / e;
    EXPECT_NEAR(dl, dr, 1e-5);
    EXPECT_NEAR(dr, truncated_lipschitz(2, 1.5), 1e-5);
    EXPECT_THROW(truncated_nonlinearity(0, 1.5, 1.0), std::domain_error);
}

TEST(Apriori, Values)
{
    SolverConfig c;
    c.truncation = 1;
    c.gamma = 2.0;
    c.alpha = 0.5;
    EXPECT_DOUBLE_EQ(apriori_bound(c, 3.0, 0.0), 4.0);
    // Lipschitz constant gamma n^(gamma-1) = 2; E_{1/2,1}(z) = exp(z^2) erfc(-z)
    EXPECT_NEAR(apriori_bound(c, 3.0, 1.0), 4.0 * std::exp(4.0) * std::erfc(-2.0), 1e-9 * 4.0 * std::exp(4.0) * 2.0);
    c.truncation = 0;
    EXPECT_THROW(apriori_bound(c, 1.0, 1.0), std::invalid_argument);
}

TEST(ValidateParams, Windows)
{
    SolverConfig c;
    c.gamma = 3.0;
    auto r = validate_params(c, 4.0, 1.5);
    EXPECT_EQ(r.gamma_position, "supercritical");
    EXPECT_DOUBLE_EQ(r.critical, 2.0);
    EXPECT_TRUE(r.global_window);
    EXPECT_FALSE(validate_params(c, 1.5, 1.5).global_window);
    EXPECT_FALSE(validate_params(c, 4.0, 2.5).global_window);
    c.gamma = 2.0;
    r = validate_params(c, 4.0);
    EXPECT_EQ(r.gamma_position, "critical");
    EXPECT_TRUE(r.blowup_hypotheses);
    c.alpha = 0.4;
    EXPECT_FALSE(validate_params(c, 4.0).blowup_hypotheses);
    SolverConfig two;
    two.grid = Grid(2, 64, 8.0);
    two.measure = SpectralMeasure::uniform_circle();
    two.beta = 1.5;
    two.gamma = 1.6;
    r = validate_params(two, 4.0, 1.5);
    EXPECT_FALSE(r.p_prime_window_nonempty);
    EXPECT_FALSE(r.notes.empty());
}

TEST(SolverConfig, Validation)
{
    SolverConfig c = small_config();
    EXPECT_NO_THROW(c.validate());
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.nonlinearity = NonlinearityKind::Truncated;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.measure = SpectralMeasure::uniform_circle();
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    const auto m = c.mesh();
    EXPECT_EQ(m.size(), 101u);
    EXPECT_DOUBLE_EQ(m.front(), 0.0);
    EXPECT_DOUBLE_EQ(m.back(), 0.2);
    EXPECT_NEAR(m[1], 0.2 * std::pow(0.01, 2.0), 1e-15);
}

TEST(MildSolve, HomogeneousDataMatchesScalarOracle)
{
    SolverConfig c = small_config();
    const auto tr = mild_solve(c, constant(c.grid, 1.0));
    ASSERT_EQ(tr.status, RunStatus::Completed);
    double worst = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double o = oracle::scalar_volterra(c.alpha, c.gamma, 1.0, tr.times[k]);
        worst = std::max(worst, std::abs(tr.levels[k].linf - o) / o);
        EXPECT_LE(tr.levels[k].linf - tr.levels[k].min, 1e-9 * o);
    }
    EXPECT_LE(worst, 1e-3);
}

TEST(MildSolve, LinearModeIsZConvolution)
{
    SolverConfig c = small_config();
    c.nonlinearity = NonlinearityKind::None;
    c.horizon = 1.0;
    c.steps = 20;
    const StableSymbol sym(c.beta, c.measure);
    const Field u0 = bump(c.grid, 1.0, 1.0);
    const auto tr = mild_solve(c, u0);
    for (std::size_t k : {std::size_t(5), tr.size() - 1}) {
        const Field ref = convolve(z_kernel_fourier(sym, c.alpha, tr.times[k], c.grid), u0);
        double err = 0.0;
        for (std::size_t i = 0; i < ref.values.size(); ++i)
            err = std::max(err, std::abs(ref.values[i] - tr.fields[k].values[i]));
        EXPECT_LE(err, 1e-9);
        EXPECT_NEAR(tr.levels[k].mass, u0.mass(), 1e-10);
    }
}

TEST(MildSolve, EvenDataStaysEven)
{
    SolverConfig c = small_config();
    c.horizon = 1.0;
    const auto tr = mild_solve(c, bump(c.grid, 1.0, 2.0));
    EXPECT_LE(evenness_residual(tr.back()), 1e-10);
    EXPECT_GT(tr.levels.back().mass, tr.levels.front().mass);
}

TEST(MildSolve, GuardFlagsBlowup)
{
    SolverConfig c = small_config();
    c.gamma = 2.0;
    c.horizon = 5.0;
    c.steps = 200;
    const auto tr = mild_solve(c, bump(c.grid, 10.0, 1.0));
    EXPECT_EQ(tr.status, RunStatus::BlowupSuspected);
    ASSERT_TRUE(tr.stop_time.has_value());
    EXPECT_LT(*tr.stop_time, 5.0);
    EXPECT_GT(tr.levels.back().linf, 1e3 * 10.0);
}

TEST(MildSolve, Deterministic)
{
    SolverConfig c = small_config();
    const Field u0 = bump(c.grid, 1.0, 1.0);
    const auto a = mild_solve(c, u0);
    c.jobs = 3;
    const auto b = mild_solve(c, u0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.fields[k].values, b.fields[k].values);
}

TEST(Truncated, StaysBelowAprioriBound)
{
    SolverConfig c = small_config();
    c.nonlinearity = NonlinearityKind::Truncated;
    c.truncation = 3;
    c.gamma = 2.0;
    c.horizon = 2.0;
    const Field u0 = bump(c.grid, 1.0, 1.0);
    const auto tr = mild_solve(c, u0);
    for (std::size_t k = 0; k < tr.size(); ++k)
        EXPECT_LE(tr.levels[k].linf, apriori_bound(c, 1.0, tr.times[k]) + 1e-6);
}

TEST(Positivity, ZeroDataAndMonotoneInN)
{
    SolverConfig c = small_config();
    c.nonlinearity = NonlinearityKind::Truncated;
    c.gamma = 2.0;
    c.horizon = 1.0;
    const Field zero(c.grid);
    c.truncation = 4;
    const auto t4 = positivity_run(c, zero);
    c.truncation = 8;
    const auto t8 = positivity_run(c, zero);
    c.truncation = 64;
    const auto t64 = positivity_run(c, zero);
    EXPECT_GE(t4.levels.back().min, -1e-8);
    EXPECT_LE(t8.levels.back().linf, t4.levels.back().linf + 1e-12);
    EXPECT_LE(t64.levels.back().linf, 0.02);
    Field neg(c.grid);
    neg.values[3] = -1.0;
    EXPECT_THROW(positivity_run(c, neg), std::invalid_argument);
}
