#pragma once

// Univariate ARMA(P, Q) models in the convention
//
//     sum_{p=0}^{P} a_p x_{t-p} = sum_{q=0}^{Q} b_q e_{t-q},   a_0 = b_0 = 1,
//
// so that an AR(1) process x_t = 0.9 x_{t-1} + e_t has a_1 = -0.9.
// Pre-sample values (t < 0) of both x and e are taken to be zero.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "tvarma/errors.hpp"

namespace tvarma {

struct ArmaModel {
    std::vector<double> ar;          ///< a_1 .. a_P
    std::vector<double> ma;          ///< b_1 .. b_Q
    double innovation_variance = 0.0;
    bool fallback = false;           ///< estimation fell back to an AR-only fit

    std::size_t p() const noexcept { return ar.size(); }
    std::size_t q() const noexcept { return ma.size(); }
    std::size_t memory() const noexcept { return std::max(ar.size(), ma.size()); }

    friend bool operator==(const ArmaModel&, const ArmaModel&) = default;
};

/// Roots of the MA polynomial 1 + b_1 z + ... + b_Q z^Q. Trailing zero
/// coefficients lower the degree (those roots sit at infinity).
inline std::vector<std::complex<double>> ma_roots(std::span<const double> ma)
{
    std::size_t degree = ma.size();
    while (degree > 0 && std::abs(ma[degree - 1]) <= 1e-14) --degree;
    if (degree == 0) return {};
    if (degree == 1) return {std::complex<double>(-1.0 / ma[0], 0.0)};

    // Companion matrix of the monic polynomial z^d + c_{d-1} z^{d-1} + ... + c_0
    // with c_k = b_k / b_d and b_0 = 1.
    const auto d = static_cast<Eigen::Index>(degree);
    const double lead = ma[degree - 1];
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index k = 1; k < d; ++k) companion(k, k - 1) = 1.0;
    companion(0, d - 1) = -1.0 / lead;
    for (Eigen::Index k = 1; k < d; ++k)
        companion(k, d - 1) = -ma[static_cast<std::size_t>(k - 1)] / lead;

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) throw numerical_error("MA root finding failed");
    std::vector<std::complex<double>> roots;
    for (Eigen::Index k = 0; k < d; ++k) roots.push_back(solver.eigenvalues()(k));
    return roots;
}

/// True when every MA root lies strictly outside the unit circle.
inline bool is_invertible(std::span<const double> ma)
{
    const auto roots = ma_roots(ma);
    return std::all_of(roots.begin(), roots.end(),
                       [](const std::complex<double>& r) { return std::abs(r) > 1.0; });
}

/// Reflects MA roots on or inside the unit circle to 1 / conj(z) and rebuilds
/// the polynomial with unit constant term. Roots that land on the circle are
/// pushed just outside it.
inline std::vector<double> enforce_invertible(std::span<const double> ma)
{
    constexpr double min_modulus = 1.0 + 1e-4;
    auto roots = ma_roots(ma);
    bool changed = false;
    for (auto& r : roots) {
        if (std::abs(r) > 1.0) continue;
        changed = true;
        if (std::abs(r) == 0.0) throw numerical_error("MA polynomial has a root at zero");
        r = 1.0 / std::conj(r);
        if (std::abs(r) <= min_modulus) r *= min_modulus / std::abs(r);
    }
    if (!changed) return {ma.begin(), ma.end()};

    // prod_i (1 - z / r_i)
    std::vector<std::complex<double>> poly{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k] += poly[k];
            next[k + 1] -= poly[k] / r;
        }
        poly = std::move(next);
    }
    std::vector<double> out(ma.size(), 0.0);
    for (std::size_t k = 1; k < poly.size() && k <= out.size(); ++k) out[k - 1] = poly[k].real();
    return out;
}

/// One-step prediction errors e_t = x_t - x~_t of `model` over `series`.
inline std::vector<double> residuals(const ArmaModel& model, std::span<const double> series)
{
    detail::require(series.size() >= model.memory() + 1,
                    "series is shorter than the model memory plus one");
    std::vector<double> e(series.size(), 0.0);
    for (std::size_t t = 0; t < series.size(); ++t) {
        double prediction = 0.0;
        for (std::size_t q = 1; q <= model.q() && q <= t; ++q) prediction += model.ma[q - 1] * e[t - q];
        for (std::size_t p = 1; p <= model.p() && p <= t; ++p) prediction -= model.ar[p - 1] * series[t - p];
        e[t] = series[t] - prediction;
    }
    return e;
}

/// x~_t = sum_q b_q e_{t-q} - sum_p a_p x_{t-p}. The last element of
/// `history` is x_{t-1}; the last element of `past_residuals` is e_{t-1}.
inline double one_step_predict(const ArmaModel& model, std::span<const double> history,
                               std::span<const double> past_residuals)
{
    detail::require(history.size() >= model.p(), "insufficient history for the AR part");
    detail::require(past_residuals.size() >= model.q(), "insufficient residuals for the MA part");
    double prediction = 0.0;
    for (std::size_t q = 1; q <= model.q(); ++q)
        prediction += model.ma[q - 1] * past_residuals[past_residuals.size() - q];
    for (std::size_t p = 1; p <= model.p(); ++p)
        prediction -= model.ar[p - 1] * history[history.size() - p];
    return prediction;
}

/// Iterates the one-step predictor `k` times, feeding predictions back as
/// observations and setting future innovations to their mean (zero).
inline std::vector<double> k_step_forecast(const ArmaModel& model, std::span<const double> history,
                                           std::span<const double> past_residuals, std::size_t k)
{
    detail::require(k >= 1, "forecast horizon must be at least one step");
    detail::require(history.size() >= model.p(), "insufficient history for the AR part");
    detail::require(past_residuals.size() >= model.q(), "insufficient residuals for the MA part");

    std::vector<double> x(history.end() - static_cast<std::ptrdiff_t>(model.p()), history.end());
    std::vector<double> e(past_residuals.end() - static_cast<std::ptrdiff_t>(model.q()),
                          past_residuals.end());
    std::vector<double> out;
    out.reserve(k);
    for (std::size_t step = 0; step < k; ++step) {
        const double next = one_step_predict(model, x, e);
        out.push_back(next);
        if (model.p() > 0) {
            x.erase(x.begin());
            x.push_back(next);
        }
        if (model.q() > 0) {
            e.erase(e.begin());
            e.push_back(0.0);
        }
    }
    return out;
}

struct ArmaFitOptions {
    std::size_t max_iterations = 50;
    std::size_t max_halvings = 10;
    /// Order of the long autoregression that proxies the innovations;
    /// 0 selects min(20, T / 10).
    std::size_t long_ar_order = 0;
};

namespace detail {

inline double sum_of_squares(const std::vector<double>& v)
{
    return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

/// Conditional least-squares AR(P) fit with zero pre-sample values.
inline std::vector<double> fit_ar_least_squares(std::span<const double> x, std::size_t order)
{
    if (order == 0) return {};
    const auto rows = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(order));
    Eigen::VectorXd target(rows);
    for (Eigen::Index t = 0; t < rows; ++t) {
        target(t) = x[static_cast<std::size_t>(t)];
        for (std::size_t p = 1; p <= order && static_cast<Eigen::Index>(p) <= t; ++p)
            design(t, static_cast<Eigen::Index>(p - 1)) = -x[static_cast<std::size_t>(t) - p];
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    return {coef.data(), coef.data() + coef.size()};
}

/// Hannan-Rissanen estimate: innovations proxied by the residuals of a long
/// autoregression, then least squares on lagged x and lagged proxies.
inline ArmaModel hannan_rissanen(std::span<const double> x, std::size_t p, std::size_t q,
                                 std::size_t long_order)
{
    ArmaModel model;
    if (q == 0) {
        model.ar = fit_ar_least_squares(x, p);
        return model;
    }
    const std::size_t m = std::max(long_order, p + q);
    const auto alpha = fit_ar_least_squares(x, m);
    std::vector<double> proxy(x.size(), 0.0);
    for (std::size_t t = m; t < x.size(); ++t) {
        double v = x[t];
        for (std::size_t i = 1; i <= m; ++i) v += alpha[i - 1] * x[t - i];
        proxy[t] = v;
    }

    const std::size_t start = m + q;
    const auto rows = static_cast<Eigen::Index>(x.size() - start);
    const auto cols = static_cast<Eigen::Index>(p + q);
    Eigen::MatrixXd design(rows, cols);
    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = start + static_cast<std::size_t>(r);
        target(r) = x[t];
        for (std::size_t i = 1; i <= p; ++i) design(r, static_cast<Eigen::Index>(i - 1)) = -x[t - i];
        for (std::size_t i = 1; i <= q; ++i)
            design(r, static_cast<Eigen::Index>(p + i - 1)) = proxy[t - i];
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    model.ar.assign(coef.data(), coef.data() + p);
    model.ma.assign(coef.data() + p, coef.data() + p + q);
    return model;
}

/// Residuals and their Jacobian with respect to (a_1..a_P, b_1..b_Q).
inline void residual_jacobian(const ArmaModel& model, std::span<const double> x,
                              Eigen::VectorXd& e, Eigen::MatrixXd& jac)
{
    const auto T = static_cast<Eigen::Index>(x.size());
    const auto P = static_cast<Eigen::Index>(model.p());
    const auto Q = static_cast<Eigen::Index>(model.q());
    e.setZero(T);
    jac.setZero(T, P + Q);
    for (Eigen::Index t = 0; t < T; ++t) {
        double v = x[static_cast<std::size_t>(t)];
        for (Eigen::Index p = 1; p <= P && p <= t; ++p)
            v += model.ar[static_cast<std::size_t>(p - 1)] * x[static_cast<std::size_t>(t - p)];
        for (Eigen::Index q = 1; q <= Q && q <= t; ++q)
            v -= model.ma[static_cast<std::size_t>(q - 1)] * e(t - q);
        e(t) = v;

        for (Eigen::Index p = 1; p <= P; ++p)
            jac(t, p - 1) = p <= t ? x[static_cast<std::size_t>(t - p)] : 0.0;
        for (Eigen::Index q = 1; q <= Q; ++q) jac(t, P + q - 1) = q <= t ? -e(t - q) : 0.0;
        for (Eigen::Index r = 1; r <= Q && r <= t; ++r) {
            const double b = model.ma[static_cast<std::size_t>(r - 1)];
            jac.row(t) -= b * jac.row(t - r);
        }
    }
}

inline double conditional_sse(const ArmaModel& model, std::span<const double> x)
{
    const auto e = residuals(model, x);
    return sum_of_squares(e);
}

inline ArmaModel with_parameters(const ArmaModel& base, const Eigen::VectorXd& theta)
{
    ArmaModel m = base;
    const auto p = base.p();
    for (std::size_t i = 0; i < p; ++i) m.ar[i] = theta(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < base.q(); ++i) m.ma[i] = theta(static_cast<Eigen::Index>(p + i));
    return m;
}

inline bool finite_model(const ArmaModel& m)
{
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(m.ar.begin(), m.ar.end(), finite) &&
           std::all_of(m.ma.begin(), m.ma.end(), finite);
}

inline ArmaModel ar_fallback(std::span<const double> x, std::size_t p, std::size_t q)
{
    ArmaModel model;
    model.ar = fit_ar_least_squares(x, p);
    model.ma.assign(q, 0.0);
    model.fallback = true;
    if (!finite_model(model)) {
        model.ar.assign(p, 0.0);
    }
    return model;
}

} // namespace detail

/// Fits an ARMA(P, Q) model to a zero-mean series by minimizing the sum of
/// squared one-step residuals. Starts from a Hannan-Rissanen estimate and
/// refines with damped Gauss-Newton; MA roots are kept outside the unit
/// circle throughout. If refinement breaks down, returns a least-squares
/// AR(P) fit with zero MA coefficients and `fallback` set.
inline ArmaModel fit_arma(std::span<const double> series, std::size_t p, std::size_t q,
                          const ArmaFitOptions& options = {})
{
    const std::size_t T = series.size();
    if (T < 10 * (p + q + 1)) {
        std::ostringstream msg;
        msg << "series too short for ARMA(" << p << "," << q << "): need " << 10 * (p + q + 1)
            << " samples, got " << T;
        throw usage_error(msg.str());
    }
    detail::require(std::all_of(series.begin(), series.end(), [](double v) { return std::isfinite(v); }),
                    "series must be finite");

    auto finish = [&](ArmaModel m) {
        m.innovation_variance = detail::sum_of_squares(residuals(m, series)) / static_cast<double>(T);
        return m;
    };

    if (p == 0 && q == 0) return finish(ArmaModel{});

    const std::size_t long_order =
        options.long_ar_order > 0 ? options.long_ar_order : std::min<std::size_t>(20, T / 10);

    ArmaModel model = detail::hannan_rissanen(series, p, q, long_order);
    if (!detail::finite_model(model)) return finish(detail::ar_fallback(series, p, q));
    if (q > 0 && !is_invertible(model.ma)) model.ma = enforce_invertible(model.ma);

    double sse = detail::conditional_sse(model, series);
    if (!std::isfinite(sse)) return finish(detail::ar_fallback(series, p, q));

    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    Eigen::VectorXd theta(static_cast<Eigen::Index>(p + q));
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        detail::residual_jacobian(model, series, e, jac);
        const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-e);
        if (!step.allFinite()) return finish(detail::ar_fallback(series, p, q));

        for (std::size_t i = 0; i < p; ++i) theta(static_cast<Eigen::Index>(i)) = model.ar[i];
        for (std::size_t i = 0; i < q; ++i) theta(static_cast<Eigen::Index>(p + i)) = model.ma[i];

        bool accepted = false;
        double scale = 1.0;
        ArmaModel candidate;
        double candidate_sse = sse;
        for (std::size_t h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
            candidate = detail::with_parameters(model, theta + scale * step);
            if (q > 0 && !is_invertible(candidate.ma)) continue;
            candidate_sse = detail::conditional_sse(candidate, series);
            if (std::isfinite(candidate_sse) && candidate_sse < sse) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const double improvement = sse - candidate_sse;
        model = candidate;
        sse = candidate_sse;
        if (improvement <= 1e-12 * std::max(sse, std::numeric_limits<double>::min())) break;
    }
    if (!detail::finite_model(model)) return finish(detail::ar_fallback(series, p, q));
    return finish(model);
}

} // namespace tvarma
