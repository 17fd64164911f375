#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tvarma/arma.hpp"
#include "tvarma/graph.hpp"
#include "tvarma/simulate.hpp"

using namespace tvarma;

TEST(GenerateJwss, UnitSpectrumIsWhite)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(4, 2.0, 1)));
    const Eigen::Index dim = 4 * 32;
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
    for (std::uint64_t r = 0; r < 50; ++r) {
        const Eigen::MatrixXd x = generate_jwss(b, [](double, double) { return 1.0; }, 32, r);
        const Eigen::Map<const Eigen::VectorXd> v(x.data(), dim);
        second += v * v.transpose();
    }
    second /= 50.0;
    const double diag = second.diagonal().mean();
    const double off = (second.cwiseAbs().sum() - second.diagonal().cwiseAbs().sum()) / double(dim * (dim - 1));
    EXPECT_NEAR(diag, 1.0, 0.1);
    EXPECT_LT(off / diag, 0.15);
}

TEST(GenerateJwss, UnitSpectrumPassesNoiseThrough)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(5, 2.0, 2)));
    const Eigen::MatrixXd x = generate_jwss(b, [](double, double) { return 1.0; }, 16, 42);
    EXPECT_LE((x - standard_normal(5, 16, 42)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GenerateJwss, ZeroSpectrumDeterminismAndErrors)
{
    const EigenBasis b = EigenBasis::identity(3);
    EXPECT_EQ(generate_jwss(b, [](double, double) { return 0.0; }, 8, 1), Eigen::MatrixXd::Zero(3, 8));
    auto h = [](double l, double w) { return 1.0 + l + std::cos(w); };
    EXPECT_EQ(generate_jwss(b, h, 10, 5), generate_jwss(b, h, 10, 5));
    EXPECT_NE(generate_jwss(b, h, 10, 5), generate_jwss(b, h, 10, 6));
    EXPECT_THROW(generate_jwss(b, [](double, double w) { return std::cos(w); }, 8, 1), usage_error);
}

TEST(Wave, ZeroFrequencyIsDoubleIntegrator)
{
    // Single vertex: only lambda = 0.
    const EigenBasis b = eigendecompose(Eigen::MatrixXd::Zero(1, 1));
    const WaveSimulation sim = simulate_wave(b, 100, 3, {1.0, 1.0, 0});
    const Eigen::RowVectorXd x = sim.signal.row(0);
    const Eigen::RowVectorXd e = sim.innovations.row(0);
    for (Eigen::Index t = 2; t < 100; ++t)
        EXPECT_NEAR(x(t), 2.0 * x(t - 1) - x(t - 2) + e(t), 1e-9 * std::max(1.0, std::abs(x(t))));
    EXPECT_DOUBLE_EQ(x(0), e(0));
    EXPECT_DOUBLE_EQ(x(1), 2.0 * x(0) + e(1));
}

TEST(Wave, NoNoiseIsZero)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(10, 3.0, 1)));
    WaveOptions opts;
    opts.noise_std = 0.0;
    EXPECT_EQ(generate_wave(b, 20, 1, opts), Eigen::MatrixXd::Zero(10, 20));
}

TEST(Wave, PaperScale)
{
    const Graph g = random_geometric_graph(50, 5.0, 1);
    const Eigen::MatrixXd x = generate_wave(g, 200, 1);
    EXPECT_EQ(x.rows(), 50);
    EXPECT_EQ(x.cols(), 200);
    EXPECT_TRUE(x.allFinite());
}

TEST(Wave, SpectralRecursionIsExact)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(20, 4.0, 3)));
    const WaveSimulation sim = simulate_wave(b, 300, 7);
    const Eigen::MatrixXd x_hat = gft(b, sim.signal);
    for (Eigen::Index n = 0; n < 20; ++n) {
        const double coupling = 2.0 * std::cos(sim.speed * std::sqrt(std::max(b.eigenvalues(n), 0.0)));
        const double scale = std::max(1.0, x_hat.row(n).cwiseAbs().maxCoeff());
        for (Eigen::Index t = 2; t < 300; ++t) {
            const double lhs = x_hat(n, t) - coupling * x_hat(n, t - 1) + x_hat(n, t - 2);
            EXPECT_NEAR(lhs, sim.innovations(n, t), 1e-11 * scale);
        }
    }
}

TEST(Wave, DefaultSpeedAndAliasingGuard)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(12, 3.0, 2)));
    const double lmax = b.eigenvalues.maxCoeff();
    EXPECT_DOUBLE_EQ(default_wave_speed(b), 2.0 / std::sqrt(lmax));
    WaveOptions opts;
    opts.speed = 3.2 / std::sqrt(lmax);
    EXPECT_THROW(simulate_wave(b, 10, 1, opts), usage_error);
    EXPECT_THROW(simulate_wave(b, 2, 1), usage_error);
}

TEST(Wave, SeedDeterminism)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(8, 3.0, 4)));
    EXPECT_EQ(generate_wave(b, 50, 11), generate_wave(b, 50, 11));
    EXPECT_NE(generate_wave(b, 50, 11), generate_wave(b, 50, 12));
}

TEST(Wave, FitsAr2WithWaveCoefficients)
{
    const EigenBasis b = eigendecompose(laplacian(random_geometric_graph(10, 3.0, 5)));
    const WaveSimulation sim = simulate_wave(b, 4000, 13);
    const Eigen::MatrixXd x_hat = gft(b, sim.signal);
    for (Eigen::Index n = 0; n < 10; ++n) {
        const Eigen::VectorXd series = x_hat.row(n).transpose();
        const ArmaModel m = fit_arma({series.data(), 4000}, 2, 0);
        const double expected = -2.0 * std::cos(sim.speed * std::sqrt(std::max(b.eigenvalues(n), 0.0)));
        EXPECT_NEAR(m.ar[0], expected, 0.1) << "frequency " << n;
        EXPECT_NEAR(m.ar[1], 1.0, 0.1) << "frequency " << n;
    }
}
