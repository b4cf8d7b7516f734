#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "fdlab/subkernels.hpp"

using namespace fdlab;

namespace {

double max_abs_diff(const Field& a, const Field& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) m = std::max(m, std::abs(a.values[k] - b.values[k]));
    return m;
}

const StableSymbol sym15(1.5, SpectralMeasure::symmetric_atoms(1.0));

}  // namespace

TEST(ZKernel, UnitMassAndEven)
{
    const Grid g(1, 1024, 32.0);
    for (double t : {0.25, 1.0, 4.0}) {
        const Field z = z_kernel(sym15, 0.6, t, g);
        EXPECT_NEAR(z.mass(), 1.0, 2e-3) << t;
        EXPECT_LE(evenness_residual(z), 1e-12);
    }
}

TEST(ZKernel, AgreesWithFourierForm)
{
    const Grid g(1, 1024, 32.0);
    const Field z = z_kernel(sym15, 0.6, 1.0, g);
    const Field zf = z_kernel_fourier(sym15, 0.6, 1.0, g);
    EXPECT_NEAR(z.at_origin() / zf.at_origin(), 1.0, 1e-3);
    EXPECT_LE(max_abs_diff(z, zf), 1e-3 * zf.max());
}

TEST(ZKernel, NearExponentialForAlphaCloseToOne)
{
    // E_{a,1}(-z) - exp(-z) = (1 - 1/Gamma(1+a)) z + O(z^2)
    const double a = 0.9;
    const Grid g(1, 256, 8.0);
    const double t = 0.05;
    const auto m = z_multiplier(sym15, a, t, g);
    const double c1 = std::abs(1.0 - 1.0 / std::tgamma(1.0 + a));
    for (std::size_t k = 0; k < 20; ++k) {
        const double xi = 2.0 * std::numbers::pi * k / (2.0 * g.L);
        const double z = std::pow(t, a) * std::pow(xi, 1.5);
        EXPECT_LE(std::abs(m[k] - std::exp(-z)), c1 * z + z * z) << k;
    }
}

TEST(YKernel, MassIsGAlpha)
{
    const Grid g(1, 1024, 32.0);
    const Field y = y_kernel(sym15, 0.5, 1.0, g);
    EXPECT_NEAR(y.mass(), 0.5641895835477563, 1e-3);
    EXPECT_LE(evenness_residual(y), 1e-12);
    const Field yf = y_kernel_fourier(sym15, 0.5, 1.0, g);
    EXPECT_LE(max_abs_diff(y, yf), 1e-3 * yf.max());
    EXPECT_GE(y.min(), -1e-3 * y.max());
}

TEST(Kernels, TwoDimensionalAnisotropic)
{
    const StableSymbol sym(1.0, SpectralMeasure::cosine_circle(1.0, 0.4));
    const Grid g(2, 128, 16.0);
    const Field z = z_kernel(sym, 0.5, 1.0, g);
    const Field zf = z_kernel_fourier(sym, 0.5, 1.0, g);
    EXPECT_NEAR(z.mass(), 1.0, 2e-3);
    EXPECT_LE(max_abs_diff(z, zf), 1e-3 * zf.max());
    EXPECT_LE(evenness_residual(z), 1e-12);
}

TEST(Kernels, Guards)
{
    const Grid g(1, 256, 8.0);
    EXPECT_THROW(z_kernel(sym15, 1.0, 1.0, g), std::domain_error);
    EXPECT_THROW(z_kernel(sym15, 0.5, 0.0, g), std::domain_error);
    EXPECT_THROW(z_kernel(sym15, 0.5, 1e-6, g), ResolutionError);
    EXPECT_THROW(y_kernel(sym15, 0.5, 1e8, g), ResolutionError);
    EXPECT_THROW(z_kernel(StableSymbol(1.0, SpectralMeasure::uniform_circle()), 0.5, 1.0, g), GridMismatch);
}

TEST(KernelTable, InvariantsAndRoundTrip)
{
    const Grid g(1, 512, 32.0);
    const auto tab = KernelTable::build(sym15, 0.6, g, geometric_ladder(0.5, 1.2, 5), {}, 1);
    const auto inv = tab.invariant_report();
    EXPECT_TRUE(inv.at("pass").get<bool>()) << inv.dump();

    const auto dir = std::filesystem::temp_directory_path() / "fdlab_table_rt";
    std::filesystem::remove_all(dir);
    tab.export_to(dir);
    const auto back = KernelTable::import_from(dir, sym15);
    ASSERT_EQ(back.size(), tab.size());
    for (std::size_t i = 0; i < tab.size(); ++i) {
        EXPECT_EQ(back.z(i).values, tab.z(i).values);
        EXPECT_EQ(back.y(i).values, tab.y(i).values);
    }
    EXPECT_THROW(KernelTable::import_from(dir, StableSymbol(1.0, SpectralMeasure::symmetric_atoms())),
                 std::invalid_argument);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(KernelTable::build(sym15, 0.6, g, {1.0, 0.5}), std::invalid_argument);
}

TEST(YZRelation, HoldsAtNearAndFarProbes)
{
    const Grid g(1, 1024, 64.0);
    const double alpha = 0.6, beta = 1.5, t = 2.0;
    const auto tab = KernelTable::build(sym15, alpha, g, {t / 1.1, t, t * 1.1}, {}, 1);
    const auto probes = omega_probes(g, alpha, beta, t, {0.5, 1.0, 10.0});
    const auto rep = verify_yz_relation(tab, probes);
    EXPECT_EQ(rep.rows.size(), 3u);
    EXPECT_TRUE(rep.pass) << rep.to_json().dump();
    EXPECT_LE(rep.max_residual, 2e-2);
}

TEST(YZRelation, RefusesCoarseLadder)
{
    const Grid g(1, 256, 16.0);
    const auto tab = KernelTable::build(sym15, 0.6, g, {1.0, 1.5, 2.25}, {}, 1);
    EXPECT_THROW(verify_yz_relation(tab, {g.flatten(140)}), std::invalid_argument);
}
