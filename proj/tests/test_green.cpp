#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fdlab/green.hpp"
#include "fdlab/io.hpp"

using namespace fdlab;

namespace {

Field random_field(const Grid& g, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(g);
    for (auto& v : f.values) v = u(rng);
    return f;
}

const StableSymbol cauchy(1.0, SpectralMeasure::symmetric_atoms(1.0));

}  // namespace

TEST(Grid, Validation)
{
    EXPECT_THROW(Grid(3, 64, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(1, 100, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(1, 32, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid(1, 64, 0.0), std::invalid_argument);
    const Grid g(2, 64, 4.0);
    EXPECT_DOUBLE_EQ(g.h(), 0.125);
    EXPECT_EQ(g.size(), 4096u);
    EXPECT_DOUBLE_EQ(g.radius(g.origin()), 0.0);
}

TEST(Green, CauchyKernel)
{
    const Grid g(1, 4096, 256.0);
    const Field G = green_function(cauchy, 1.0, g);
    EXPECT_NEAR(G.at_origin(), 1.0 / std::numbers::pi, 2e-3 / std::numbers::pi);
    for (double x : {0.5, 1.0, 3.0}) {
        const auto k = g.flatten(g.origin_index() + static_cast<int>(std::lround(x / g.h())));
        const double exact = 1.0 / (std::numbers::pi * (1.0 + x * x));
        EXPECT_NEAR(G.values[k] / exact, 1.0, 5e-3) << x;
    }
}

TEST(Green, MassAndPositivity)
{
    for (int d : {1, 2}) {
        const Grid g(d, d == 1 ? 1024 : 256, 32.0);
        const auto m = d == 1 ? SpectralMeasure::symmetric_atoms(1.0) : SpectralMeasure::cosine_circle(1.0, 0.3);
        for (double beta : {0.8, 1.5}) {
            const StableSymbol sym(beta, m);
            const double t = std::pow(1.0, beta);
            const Field G = green_function(sym, t, g);
            EXPECT_NEAR(G.mass(), 1.0, 2e-3);
            EXPECT_GE(G.min(), -1e-3 * G.max());
        }
    }
}

TEST(Green, SelfSimilarity)
{
    const StableSymbol sym(1.5, SpectralMeasure::symmetric_atoms(1.0));
    // t = 2^beta doubles the length scale; compare on grids with doubled L
    const Grid g1(1, 1024, 32.0), g2(1, 1024, 64.0);
    const double t = std::pow(2.0, 1.5);
    const Field a = green_function(sym, t, g2);
    const Field b = green_function(sym, 1.0, g1);
    for (int off : {0, 5, 20, 60}) {
        const double lhs = a.values[g2.flatten(g2.origin_index() + off)];
        const double rhs = std::pow(t, -1.0 / 1.5) * b.values[g1.flatten(g1.origin_index() + off)];
        EXPECT_NEAR(lhs / rhs, 1.0, 1e-3) << off;
    }
}

TEST(Green, SemigroupAndEvenness)
{
    const StableSymbol sym(1.2, SpectralMeasure::uniform_circle(1.0));
    const Grid g(2, 256, 32.0);
    const Field a = green_function(sym, 1.0, g);
    const Field b = green_function(sym, 1.5, g);
    const Field c = green_function(sym, 2.5, g);
    const Field ab = convolve(a, b);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(ab.values[k] - c.values[k]));
    EXPECT_LE(err, 1e-3 * c.max());
    const Field r = reflect(c);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(r.values[k], c.values[k], 1e-12 * c.max());
}

TEST(Green, TailSlope)
{
    const double beta = 1.0;
    const StableSymbol sym(beta, SpectralMeasure::symmetric_atoms(1.0));
    const Grid g(1, 8192, 512.0);
    const Field G = green_function(sym, 1.0, g);
    auto at = [&](double x) { return G.values[g.flatten(g.origin_index() + static_cast<int>(std::lround(x / g.h())))]; };
    const double slope = std::log(at(40.0) / at(10.0)) / std::log(4.0);
    EXPECT_NEAR(slope, -(1.0 + beta), 0.05 * (1.0 + beta));
}

TEST(Green, ResolutionGuard)
{
    const Grid g(1, 256, 8.0);
    EXPECT_THROW(green_function(cauchy, 1e-3, g), ResolutionError);
    EXPECT_THROW(green_function(cauchy, 10.0, g), ResolutionError);
    EXPECT_THROW(green_function(cauchy, -1.0, g), std::domain_error);
    EXPECT_THROW(green_function(StableSymbol(1.0, SpectralMeasure::uniform_circle()), 1.0, g), GridMismatch);
}

TEST(Convolve, DeltaMassCommutativity)
{
    for (int d : {1, 2}) {
        const Grid g(d, 64, 3.0);
        const Field f = random_field(g, 7);
        const Field k = random_field(g, 11);
        const Field id = convolve(discrete_delta(g), f);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(id.values[i], f.values[i], 1e-12);
        const Field kf = convolve(k, f), fk = convolve(f, k);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(kf.values[i], fk.values[i], 1e-12);
        EXPECT_NEAR(kf.mass(), k.mass() * f.mass(), 1e-10 * std::max(1.0, std::abs(k.mass() * f.mass())));
    }
    EXPECT_THROW(convolve(Field(Grid(1, 64, 1.0)), Field(Grid(1, 128, 1.0))), GridMismatch);
}

TEST(FieldIo, BinaryRoundTrip)
{
    const Grid g(2, 64, 2.5);
    Field f = random_field(g, 3);
    f.time_label = 0.75;
    const auto path = std::filesystem::temp_directory_path() / "fdlab_roundtrip.fdf";
    io::write_field_binary(f, path);
    const Field back = io::read_field_binary(path);
    EXPECT_EQ(back.grid, g);
    EXPECT_EQ(back.time_label, 0.75);
    EXPECT_EQ(back.values, f.values);
    EXPECT_EQ(std::filesystem::file_size(path), 4 + 12 + 16 + g.size() * 8);
    std::filesystem::remove(path);
}
