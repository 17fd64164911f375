#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tvarma/arma.hpp"

using namespace tvarma;

namespace {

double mean_square(const std::vector<double>& v, std::size_t skip = 0)
{
    double s = 0.0;
    for (std::size_t i = skip; i < v.size(); ++i) s += v[i] * v[i];
    return s / static_cast<double>(v.size() - skip);
}

ArmaModel make_model(std::vector<double> ar, std::vector<double> ma)
{
    ArmaModel m;
    m.ar = std::move(ar);
    m.ma = std::move(ma);
    return m;
}

} // namespace

TEST(FitArma, RecoversAr1)
{
    const auto eps = oracle::gaussian_noise(2000, 3);
    const auto x = oracle::arma_generate({-0.9}, {}, eps);
    const ArmaModel m = fit_arma(x, 1, 0);
    ASSERT_EQ(m.p(), 1u);
    EXPECT_GE(m.ar[0], -0.95);
    EXPECT_LE(m.ar[0], -0.85);
    EXPECT_FALSE(m.fallback);
}

TEST(FitArma, WhiteNoiseOrderZero)
{
    const auto x = oracle::gaussian_noise(1000, 8, 2.0);
    const ArmaModel m = fit_arma(x, 0, 0);
    EXPECT_EQ(m.p(), 0u);
    EXPECT_EQ(m.q(), 0u);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= double(x.size() - 1);
    EXPECT_NEAR(m.innovation_variance, var, 0.1 * var);
}

TEST(FitArma, RecoversMa1)
{
    const auto eps = oracle::gaussian_noise(5000, 4);
    const auto x = oracle::arma_generate({}, {0.5}, eps);
    const ArmaModel m = fit_arma(x, 0, 1);
    ASSERT_EQ(m.q(), 1u);
    EXPECT_GE(m.ma[0], 0.4);
    EXPECT_LE(m.ma[0], 0.6);
}

TEST(FitArma, RecoversArma21)
{
    const auto eps = oracle::gaussian_noise(6000, 12);
    const auto x = oracle::arma_generate({-1.2, 0.5}, {0.4}, eps);
    const ArmaModel m = fit_arma(x, 2, 1);
    EXPECT_NEAR(m.ar[0], -1.2, 0.1);
    EXPECT_NEAR(m.ar[1], 0.5, 0.1);
    EXPECT_NEAR(m.ma[0], 0.4, 0.1);
    EXPECT_NEAR(m.innovation_variance, 1.0, 0.1);
}

TEST(FitArma, TooShort)
{
    const std::vector<double> x(29, 1.0);
    EXPECT_THROW(fit_arma(x, 1, 1), usage_error);
    EXPECT_NO_THROW(fit_arma(std::vector<double>(30, 0.0), 1, 1));
}

TEST(FitArma, EveryFitIsInvertible)
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t p = static_cast<std::size_t>(trial % 3);
        const std::size_t q = 1 + static_cast<std::size_t>(trial % 2);
        // Some generators are deliberately non-invertible.
        std::vector<double> ma = oracle::random_invertible_ma(q, rng);
        if (trial % 4 == 0) ma[0] = 1.6;
        const auto eps = oracle::gaussian_noise(800, static_cast<unsigned>(100 + trial));
        const auto x = oracle::arma_generate(oracle::random_stable_ar(p, rng), ma, eps);
        const ArmaModel m = fit_arma(x, p, q);
        for (const auto& r : ma_roots(m.ma)) EXPECT_GT(std::abs(r), 1.0) << "trial " << trial;
        EXPECT_GE(m.innovation_variance, 0.0);
    }
}

TEST(FitArma, RefitIdempotence)
{
    const auto eps = oracle::gaussian_noise(10000, 21);
    const auto x = oracle::arma_generate({-0.6, 0.2}, {0.3}, eps);
    const ArmaModel first = fit_arma(x, 2, 1);
    const auto regenerated = oracle::arma_generate(first.ar, first.ma, oracle::gaussian_noise(10000, 22));
    const ArmaModel second = fit_arma(regenerated, 2, 1);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(second.ar[i], first.ar[i], 0.1);
    EXPECT_NEAR(second.ma[0], first.ma[0], 0.1);
}

TEST(FitArma, Deterministic)
{
    const auto x = oracle::arma_generate({-0.5}, {0.2}, oracle::gaussian_noise(500, 2));
    EXPECT_EQ(fit_arma(x, 1, 1), fit_arma(x, 1, 1));
}

TEST(Invertibility, ReflectsRootsInsideCircle)
{
    // 1 + 2z has root -0.5; reflected to -2 gives 1 + 0.5z.
    const std::vector<double> ma{2.0};
    EXPECT_FALSE(is_invertible(ma));
    const auto fixed = enforce_invertible(ma);
    ASSERT_EQ(fixed.size(), 1u);
    EXPECT_NEAR(fixed[0], 0.5, 1e-12);
    EXPECT_TRUE(is_invertible(fixed));

    // (1 - 1.25z)(1 + 0.5z) = 1 - 0.75z - 0.625z^2
    const std::vector<double> quad{-0.75, -0.625};
    const auto fixed2 = enforce_invertible(quad);
    EXPECT_TRUE(is_invertible(fixed2));
    EXPECT_NEAR(fixed2[0], -0.8 + 0.5, 1e-10);
    EXPECT_NEAR(fixed2[1], -0.4, 1e-10);
}

TEST(Residuals, WhiteModelReturnsSeries)
{
    const std::vector<double> x{1.0, -2.0, 3.5};
    EXPECT_EQ(residuals(ArmaModel{}, x), x);
}

TEST(Residuals, ZeroSeries)
{
    const auto e = residuals(make_model({-0.3, 0.1}, {0.2}), std::vector<double>(10, 0.0));
    for (double v : e) EXPECT_EQ(v, 0.0);
}

TEST(Residuals, RecoverSeededInnovations)
{
    const auto eps = oracle::gaussian_noise(400, 9);
    const auto x = oracle::arma_generate({-0.7, 0.1}, {0.4, -0.2}, eps);
    const auto e = residuals(make_model({-0.7, 0.1}, {0.4, -0.2}), x);
    for (std::size_t t = 2; t < eps.size(); ++t) EXPECT_NEAR(e[t], eps[t], 1e-6);
}

TEST(Residuals, Optimality)
{
    std::mt19937_64 rng(31);
    std::normal_distribution<double> perturb(0.0, 0.1);
    const std::vector<double> ar{-0.8, 0.15};
    const std::vector<double> ma{0.35};
    const auto x = oracle::arma_generate(ar, ma, oracle::gaussian_noise(5000, 5));
    const double truth = mean_square(residuals(make_model(ar, ma), x));
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a = ar;
        std::vector<double> b = ma;
        for (auto& v : a) v += perturb(rng);
        for (auto& v : b) v += perturb(rng);
        if (!is_invertible(b)) b = enforce_invertible(b);
        EXPECT_LE(truth, mean_square(residuals(make_model(a, b), x))) << "trial " << trial;
    }
}

TEST(Residuals, ShortSeries)
{
    EXPECT_THROW(residuals(make_model({0.1, 0.1}, {}), std::vector<double>{1.0, 2.0}), usage_error);
}

TEST(OneStepPredict, Examples)
{
    EXPECT_DOUBLE_EQ(one_step_predict(make_model({-0.9}, {}), std::vector<double>{5.0, 2.0}, {}), 1.8);
    EXPECT_DOUBLE_EQ(one_step_predict(make_model({}, {0.5}), {}, std::vector<double>{1.0}), 0.5);
    EXPECT_DOUBLE_EQ(one_step_predict(make_model({0.3, -0.2}, {0.7}), std::vector<double>{0.0, 0.0},
                                      std::vector<double>{0.0}),
                     0.0);
    EXPECT_THROW(one_step_predict(make_model({0.3, -0.2}, {}), std::vector<double>{1.0}, {}), usage_error);
}

TEST(KStepForecast, Ar1ClosedForm)
{
    const auto f = k_step_forecast(make_model({-0.9}, {}), std::vector<double>{1.0}, {}, 3);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_NEAR(f[0], 0.9, 1e-15);
    EXPECT_NEAR(f[1], 0.81, 1e-15);
    EXPECT_NEAR(f[2], 0.729, 1e-15);
}

TEST(KStepForecast, MaMemoryExhausted)
{
    const auto f = k_step_forecast(make_model({}, {0.5}), {}, std::vector<double>{2.0}, 2);
    EXPECT_DOUBLE_EQ(f[0], 1.0);
    EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(KStepForecast, Arma11HandUnrolled)
{
    // x~_{t} = 0.4 e_{t-1} + 0.6 x_{t-1}
    const ArmaModel m = make_model({-0.6}, {0.4});
    const std::vector<double> x{1.0, 2.0, -1.0};
    const auto e = residuals(m, x);
    // e0 = 1; x~1 = 0.4 + 0.6 = 1.0, e1 = 1; x~2 = 0.4 + 1.2 = 1.6, e2 = -2.6
    EXPECT_NEAR(e[2], -2.6, 1e-14);
    const auto f = k_step_forecast(m, x, e, 3);
    const double s1 = 0.4 * -2.6 + 0.6 * -1.0;
    const double s2 = 0.6 * s1;
    const double s3 = 0.6 * s2;
    EXPECT_NEAR(f[0], s1, 1e-14);
    EXPECT_NEAR(f[1], s2, 1e-14);
    EXPECT_NEAR(f[2], s3, 1e-14);
    EXPECT_THROW(k_step_forecast(m, x, e, 0), usage_error);
}
