#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tvarma/baselines.hpp"
#include "tvarma/graph.hpp"
#include "tvarma/joint_causal.hpp"
#include "tvarma/simulate.hpp"

using namespace tvarma;

namespace {

EigenBasis graph_basis(std::size_t n, double degree, std::uint64_t seed)
{
    return eigendecompose(laplacian(random_geometric_graph(n, degree, seed)));
}

double correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const Eigen::ArrayXd x = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()).array() - a.mean();
    const Eigen::ArrayXd y = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()).array() - b.mean();
    return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

/// AR(1)-in-time spectrum whose pole depends on the graph frequency.
auto ar1_spectrum(double lmax)
{
    return [lmax](double lambda, double w) {
        const double a = 0.85 - 1.2 * lambda / lmax;
        return 1.0 / std::norm(1.0 - a * std::polar(1.0, -w));
    };
}

} // namespace

TEST(Disjoint, EqualsJointWithIdentityBasis)
{
    const EigenBasis b = graph_basis(6, 3.0, 2);
    const Eigen::MatrixXd x = generate_wave(b, 300, 5);
    const DisjointModel d = fit_disjoint(x, 2, 1);
    const JointCausalModel j = fit_joint_causal(x, EigenBasis::identity(6), 2, 1);
    ASSERT_EQ(d.models.size(), 6u);
    for (std::size_t n = 0; n < 6; ++n) {
        EXPECT_EQ(d.models[n].ar, j.models()[n].ar);
        EXPECT_EQ(d.models[n].ma, j.models()[n].ma);
    }
    EXPECT_EQ(d.mean, j.mean());
    const Eigen::MatrixXd h = x.leftCols(200);
    EXPECT_LE((d.predict(h, 3) - j.predict(h, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Disjoint, ConstantSeriesForecastMeans)
{
    Eigen::MatrixXd x(3, 40);
    x.row(0).setConstant(1.0);
    x.row(1).setConstant(-4.0);
    x.row(2).setConstant(2.5);
    const DisjointModel d = fit_disjoint(x, 1, 0);
    const Eigen::MatrixXd f = d.predict(x, 2);
    for (Eigen::Index k = 0; k < 2; ++k) EXPECT_LE((f.col(k) - x.col(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Disjoint, SingleNodeIsUnivariate)
{
    const auto series = oracle::arma_generate({-0.7}, {0.2}, oracle::gaussian_noise(500, 3));
    Eigen::MatrixXd x(1, 500);
    for (Eigen::Index t = 0; t < 500; ++t) x(0, t) = series[std::size_t(t)];
    const DisjointModel d = fit_disjoint(x, 1, 1);
    const Eigen::VectorXd centered = (x.row(0).array() - x.mean()).transpose();
    const ArmaModel direct = fit_arma({centered.data(), 500}, 1, 1);
    EXPECT_NEAR(d.models[0].ar[0], direct.ar[0], 1e-9);
    EXPECT_NEAR(d.models[0].ma[0], direct.ma[0], 1e-9);
    EXPECT_NEAR(d.models[0].innovation_variance, direct.innovation_variance, 1e-9);
}

TEST(Disjoint, NodeSelectionKeepsHighEnergyNodes)
{
    Eigen::MatrixXd x = standard_normal(4, 100, 1);
    x.row(2) *= 10.0;
    const DisjointModel d = fit_disjoint(x, 1, 0, Selection::top(1));
    EXPECT_EQ(d.selected, (std::vector<std::size_t>{2}));
    EXPECT_EQ(d.models[0].ar, std::vector<double>{0.0});
    const Eigen::MatrixXd f = d.predict(x, 1);
    EXPECT_NEAR(f(0, 0), d.mean(0), 1e-12);
}

TEST(EstimateJpsd, WhiteNoiseIsFlat)
{
    const EigenBasis b = graph_basis(8, 3.0, 3);
    const Eigen::MatrixXd x = standard_normal(8, 20 * 32, 7);
    const Jpsd h = estimate_jpsd(x, b, 32);
    EXPECT_EQ(h.window(), 32);
    EXPECT_NEAR(h.h.mean(), 1.0, 0.3);
    // Bartlett averaging of 20 windows: per-bin relative spread about 1/sqrt(20).
    const double rms = std::sqrt((h.h.array() - 1.0).square().mean());
    EXPECT_LT(rms, 0.3);
}

TEST(EstimateJpsd, TracksGeneratingFilter)
{
    const EigenBasis b = graph_basis(6, 3.0, 4);
    const double lmax = b.eigenvalues.maxCoeff();
    auto g = [lmax](double lambda, double w) { return (1.0 + std::cos(w)) * std::exp(-lambda / lmax) + 0.1; };
    const Eigen::Index window = 32;
    const Eigen::MatrixXd x = apply_joint_filter(b, g, standard_normal(6, 50 * window, 8));
    const Jpsd h = estimate_jpsd(x, b, window);
    const Eigen::MatrixXd g2 = sample_joint_response(b, window, g).array().square();
    EXPECT_GT(correlation(h.h, g2), 0.9);
}

TEST(EstimateJpsd, ZeroSignalAndErrors)
{
    const EigenBasis b = EigenBasis::identity(3);
    EXPECT_EQ(estimate_jpsd(Eigen::MatrixXd::Zero(3, 20), b, 10).h, Eigen::MatrixXd::Zero(3, 10));
    EXPECT_THROW(estimate_jpsd(Eigen::MatrixXd::Zero(3, 19), b, 10), usage_error);
    EXPECT_THROW(estimate_jpsd(Eigen::MatrixXd::Zero(2, 40), b, 10), usage_error);
}

TEST(Noncausal, WhiteSpectrumPredictsZero)
{
    const EigenBasis b = graph_basis(5, 2.0, 5);
    const Jpsd h = make_jpsd(b, 16, [](double, double) { return 1.0; });
    const Eigen::MatrixXd f = predict_noncausal(h, b, standard_normal(5, 16, 1), 3);
    EXPECT_EQ(f.rows(), 5);
    EXPECT_EQ(f.cols(), 3);
    EXPECT_LE(f.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Noncausal, ZeroHorizonIsEmpty)
{
    const EigenBasis b = EigenBasis::identity(2);
    const Jpsd h = make_jpsd(b, 8, [](double, double) { return 1.0; });
    const Eigen::MatrixXd f = predict_noncausal(h, b, Eigen::MatrixXd::Ones(2, 8), 0);
    EXPECT_EQ(f.cols(), 0);
}

TEST(Noncausal, SeparableAr1MatchesCausalPredictor)
{
    const EigenBasis b = graph_basis(6, 3.0, 6);
    const double lmax = b.eigenvalues.maxCoeff();
    const auto h = ar1_spectrum(lmax);
    const Jpsd jpsd = make_jpsd(b, 64, h);
    const Eigen::MatrixXd history = generate_jwss(b, h, 64, 9);
    const Eigen::MatrixXd f = predict_noncausal(jpsd, b, history, 1);
    Eigen::VectorXd last_hat = gft(b, history.rightCols(1));
    for (Eigen::Index n = 0; n < 6; ++n) last_hat(n) *= 0.85 - 1.2 * b.eigenvalues(n) / lmax;
    const Eigen::VectorXd expected = igft(b, last_hat);
    EXPECT_LT((f.col(0) - expected).norm() / expected.norm(), 0.05);
}

TEST(Noncausal, CovarianceIsPsdAndPredictorLinear)
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> uniform(0.0, 3.0);
    const EigenBasis b = graph_basis(5, 2.0, 7);
    Jpsd jpsd{Eigen::MatrixXd(5, 24)};
    for (Eigen::Index n = 0; n < 5; ++n)
        for (Eigen::Index tau = 0; tau <= 12; ++tau) {
            jpsd.h(n, tau) = uniform(rng);
            jpsd.h(n, (24 - tau) % 24) = jpsd.h(n, tau);
        }
    const Eigen::MatrixXd sigma = jpsd_covariance(jpsd, b, 24);
    EXPECT_LE((sigma - sigma.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::MatrixXd reg = sigma;
    reg.diagonal().array() += 1e-6 * sigma.trace() / double(sigma.rows());
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(reg).info(), Eigen::Success);

    const NoncausalPredictor predictor(jpsd, b, Eigen::VectorXd::Zero(5));
    for (std::size_t k = 1; k < 12; ++k) EXPECT_NO_THROW(predictor.gain(k));
    const Eigen::MatrixXd x = standard_normal(5, 24, 3);
    const double alpha = -2.75;
    const Eigen::MatrixXd lhs = predictor.predict(alpha * x, 4);
    const Eigen::MatrixXd rhs = alpha * predictor.predict(x, 4);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
    EXPECT_THROW(predictor.predict(x, 12), usage_error);
}

TEST(Noncausal, BeatsDisjointOnJointlyGaussianData)
{
    const EigenBasis b = graph_basis(16, 4.0, 8);
    const auto h = ar1_spectrum(b.eigenvalues.maxCoeff());
    const Jpsd jpsd = make_jpsd(b, 64, h);
    const NoncausalPredictor noncausal(jpsd, b, Eigen::VectorXd::Zero(16));
    double nc_total = 0.0;
    double dj_total = 0.0;
    int wins = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const Eigen::MatrixXd x = generate_jwss(b, h, 1024, 1000 + r);
        const DisjointModel disjoint = fit_disjoint(x.leftCols(512), 2, 0);
        double nc = 0.0;
        double dj = 0.0;
        for (Eigen::Index t = 512; t < 1024; ++t) {
            const Eigen::MatrixXd history = x.leftCols(t);
            nc += (noncausal.predict(history, 1).col(0) - x.col(t)).squaredNorm();
            dj += (disjoint.predict(history, 1).col(0) - x.col(t)).squaredNorm();
        }
        nc_total += nc;
        dj_total += dj;
        if (nc <= dj) ++wins;
    }
    EXPECT_LT(nc_total, dj_total);
    EXPECT_GE(wins, 15);
}
