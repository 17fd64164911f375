#pragma once

// Comparison predictors.
//
//  * Disjoint causal: one ARMA per vertex, graph ignored (the joint causal
//    model with the identity operator).
//  * Joint non-causal: conditional-Gaussian (MMSE) prediction from a joint
//    power spectral density estimated by averaging joint periodograms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "tvarma/arma.hpp"
#include "tvarma/errors.hpp"
#include "tvarma/joint_causal.hpp"
#include "tvarma/spectral.hpp"

namespace tvarma {

/// One ARMA model per vertex. Vertices left out of `selected` carry an
/// ARMA(0, 0) model and are forecast at their training mean.
struct DisjointModel {
    std::vector<ArmaModel> models;
    Eigen::VectorXd mean;
    std::vector<std::size_t> selected;
    std::size_t p = 0;
    std::size_t q = 0;

    std::size_t vertices() const noexcept { return models.size(); }

    Eigen::MatrixXd predict(const TimeVertexSignal& history, std::size_t k) const
    {
        detail::require(k >= 1, "forecast horizon must be at least one step");
        detail::require(static_cast<std::size_t>(history.rows()) == models.size(),
                        "dimension mismatch between model and history");
        detail::require(static_cast<std::size_t>(history.cols()) >= std::max(p, q) + 1,
                        "insufficient history: need at least max(P, Q) + 1 columns");
        Eigen::MatrixXd out = mean.replicate(1, static_cast<Eigen::Index>(k));
        for (auto node : selected) {
            const auto row = static_cast<Eigen::Index>(node);
            const Eigen::VectorXd series = (history.row(row).array() - mean(row)).transpose();
            const std::span<const double> view(series.data(), static_cast<std::size_t>(series.size()));
            const auto e = residuals(models[node], view);
            const auto f = k_step_forecast(models[node], view, e, k);
            for (std::size_t s = 0; s < k; ++s) out(row, static_cast<Eigen::Index>(s)) += f[s];
        }
        return out;
    }
};

/// Per-vertex ARMA fits on the raw (demeaned) series. With a non-trivial
/// `criterion` only the highest-energy vertices are modelled.
inline DisjointModel fit_disjoint(const TimeVertexSignal& x_train, std::size_t p, std::size_t q,
                                  const Selection& criterion = Selection::all(),
                                  const ArmaFitOptions& options = {})
{
    detail::require(x_train.rows() > 0, "training signal has no vertices");
    detail::require(static_cast<std::size_t>(x_train.cols()) >= 10 * (p + q + 1),
                    "training window too short: need T >= 10 (P + Q + 1)");
    detail::require(x_train.allFinite(), "training signal must be finite");

    DisjointModel model;
    model.p = p;
    model.q = q;
    model.mean = row_means(x_train);
    const Eigen::MatrixXd centered = x_train.colwise() - model.mean;
    model.selected = select_top_k(Eigen::VectorXd(centered.rowwise().squaredNorm()), criterion);

    ArmaModel idle;
    idle.ar.assign(p, 0.0);
    idle.ma.assign(q, 0.0);
    model.models.assign(static_cast<std::size_t>(x_train.rows()), idle);
    for (auto node : model.selected) {
        const Eigen::VectorXd series = centered.row(static_cast<Eigen::Index>(node)).transpose();
        try {
            model.models[node] =
                fit_arma({series.data(), static_cast<std::size_t>(series.size())}, p, q, options);
        } catch (const usage_error& err) {
            std::ostringstream msg;
            msg << "vertex " << node << ": " << err.what();
            throw usage_error(msg.str());
        }
    }
    for (std::size_t node = 0; node < model.models.size(); ++node) {
        if (std::binary_search(model.selected.begin(), model.selected.end(), node)) continue;
        const Eigen::VectorXd series = centered.row(static_cast<Eigen::Index>(node)).transpose();
        model.models[node].innovation_variance = series.squaredNorm() / static_cast<double>(series.size());
    }
    return model;
}

/// Joint power spectral density h(lambda_n, w_tau) on an N x T_w grid.
struct Jpsd {
    Eigen::MatrixXd h;

    Eigen::Index vertices() const noexcept { return h.rows(); }
    Eigen::Index window() const noexcept { return h.cols(); }
};

/// Samples a JPSD function h(lambda, w) on the grid of window `window`.
template <class Response>
    requires std::invocable<Response, double, double>
Jpsd make_jpsd(const EigenBasis& basis, Eigen::Index window, Response&& h)
{
    Jpsd out{sample_joint_response(basis, window, h)};
    detail::require((out.h.array() >= 0.0).all(), "JPSD must be nonnegative");
    return out;
}

/// Bartlett estimate: average of |JFT(window)|^2 over the non-overlapping
/// length-`window` blocks of `x` (a trailing partial block is dropped).
/// The caller removes the mean.
inline Jpsd estimate_jpsd(const TimeVertexSignal& x, const EigenBasis& basis, Eigen::Index window)
{
    detail::require_vertices(basis, x.rows());
    detail::require(window >= 1, "window length must be positive");
    const Eigen::Index blocks = x.cols() / window;
    if (blocks < 2) {
        std::ostringstream msg;
        msg << "too few windows for a JPSD estimate: " << x.cols() << " samples give " << blocks
            << " window(s) of length " << window << ", need 2";
        throw usage_error(msg.str());
    }
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.rows(), window);
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const JointSpectrum s = jft(basis, x.middleCols(b * window, window));
        acc += s.coefficients.cwiseAbs2();
    }
    return {acc / static_cast<double>(blocks)};
}

namespace detail {

/// Lag-d covariance per graph frequency implied by a JPSD with circular time:
/// c_n(d) = (1/T_w) sum_tau h(n, tau) exp(j w_tau d) (real part).
inline Eigen::MatrixXd jpsd_autocovariance(const Jpsd& jpsd)
{
    const Eigen::Index window = jpsd.window();
    const Eigen::MatrixXcd c = dft_rows(jpsd.h, +1.0) / std::sqrt(static_cast<double>(window));
    return c.real();
}

} // namespace detail

/// Covariance of vec(X) over `span` consecutive columns of a JWSS process
/// with the given JPSD: the leading block of U_J diag(h) U_J^H.
/// Entry ((t, i), (s, j)) sits at (t N + i, s N + j).
inline Eigen::MatrixXd jpsd_covariance(const Jpsd& jpsd, const EigenBasis& basis, Eigen::Index span)
{
    detail::require_vertices(basis, jpsd.vertices());
    detail::require(span >= 1 && span <= jpsd.window(), "covariance span must lie in [1, T_w]");
    const Eigen::Index n = jpsd.vertices();
    const Eigen::Index window = jpsd.window();
    const Eigen::MatrixXd lag_cov = detail::jpsd_autocovariance(jpsd);
    const Eigen::MatrixXd& u = basis.eigenvectors;

    std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(window));
    Eigen::MatrixXd sigma(n * span, n * span);
    for (Eigen::Index t = 0; t < span; ++t) {
        for (Eigen::Index s = 0; s < span; ++s) {
            const Eigen::Index d = ((t - s) % window + window) % window;
            auto& block = blocks[static_cast<std::size_t>(d)];
            if (block.size() == 0) block = u * lag_cov.col(d).asDiagonal() * u.transpose();
            sigma.block(t * n, s * n, n, n) = block;
        }
    }
    return sigma;
}

/// MMSE forecaster for a JWSS process with known (or estimated) JPSD.
///
/// The JPSD describes a process that is periodic over the window T_w, so
/// conditioning uses only a context of floor(T_w / 2) columns: the last
/// floor(T_w / 2) - k observed columns plus the k unknown ones. Within that
/// span no two columns are more than half a period apart.
class NoncausalPredictor {
public:
    NoncausalPredictor(Jpsd jpsd, EigenBasis basis, Eigen::VectorXd mean)
        : jpsd_(std::move(jpsd)), basis_(std::move(basis)), mean_(std::move(mean))
    {
        detail::require_vertices(basis_, jpsd_.vertices());
        detail::require(mean_.size() == jpsd_.vertices(), "mean must have one entry per vertex");
        detail::require((jpsd_.h.array() >= 0.0).all() && jpsd_.h.allFinite(),
                        "JPSD must be finite and nonnegative");
    }

    const Jpsd& jpsd() const noexcept { return jpsd_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    Eigen::Index context() const noexcept { return jpsd_.window() / 2; }

    /// Number of observed columns the k-step gain conditions on.
    Eigen::Index past_columns(std::size_t k) const
    {
        return context() - static_cast<Eigen::Index>(k);
    }

    /// Forecast of the next `k` columns (N x k); `k` = 0 yields an empty matrix.
    Eigen::MatrixXd predict(const TimeVertexSignal& history, std::size_t k) const
    {
        const Eigen::Index n = jpsd_.vertices();
        if (k == 0) return Eigen::MatrixXd(n, 0);
        detail::require(history.rows() == n, "dimension mismatch between JPSD and history");
        const Eigen::Index past = past_columns(k);
        if (past < 1) {
            std::ostringstream msg;
            msg << "horizon " << k << " too long for window " << jpsd_.window()
                << ": need k < T_w / 2";
            throw usage_error(msg.str());
        }
        detail::require(history.cols() >= past, "insufficient history for the non-causal predictor");

        const Eigen::MatrixXd& g = gain(k);
        const Eigen::MatrixXd recent = history.rightCols(past).colwise() - mean_;
        const Eigen::VectorXd future =
            g * Eigen::Map<const Eigen::VectorXd>(recent.data(), recent.size());
        Eigen::MatrixXd out = Eigen::Map<const Eigen::MatrixXd>(future.data(), n, static_cast<Eigen::Index>(k));
        return out.colwise() + mean_;
    }

    /// Gain Sigma_fp (Sigma_pp + delta I)^{-1}, with delta = 1e-6 times the
    /// mean diagonal of Sigma_pp.
    const Eigen::MatrixXd& gain(std::size_t k) const
    {
        const std::lock_guard lock(*cache_mutex_);
        if (auto it = gains_.find(k); it != gains_.end()) return it->second;
        const Eigen::Index n = jpsd_.vertices();
        const Eigen::Index past = past_columns(k);
        detail::require(past >= 1, "horizon too long for the JPSD window");
        const Eigen::Index span = past + static_cast<Eigen::Index>(k);
        const Eigen::MatrixXd sigma = jpsd_covariance(jpsd_, basis_, span);

        const Eigen::Index np = n * past;
        Eigen::MatrixXd spp = sigma.topLeftCorner(np, np);
        const double delta = 1e-6 * spp.trace() / static_cast<double>(np);
        spp.diagonal().array() += delta;
        const Eigen::LLT<Eigen::MatrixXd> llt(spp);
        if (delta <= 0.0 || !std::isfinite(delta) || llt.info() != Eigen::Success)
            throw numerical_error("past covariance is singular even after regularization");
        const Eigen::MatrixXd sfp = sigma.bottomLeftCorner(sigma.rows() - np, np);
        Eigen::MatrixXd g = llt.solve(sfp.transpose()).transpose();
        return gains_.emplace(k, std::move(g)).first->second;
    }

private:
    Jpsd jpsd_;
    EigenBasis basis_;
    Eigen::VectorXd mean_;
    // Gains are cached per horizon; entries are never erased, so references
    // handed out stay valid.
    mutable std::map<std::size_t, Eigen::MatrixXd> gains_;
    std::shared_ptr<std::mutex> cache_mutex_ = std::make_shared<std::mutex>();
};

/// One-shot non-causal forecast of `k` columns following a demeaned history.
inline Eigen::MatrixXd predict_noncausal(const Jpsd& jpsd, const EigenBasis& basis,
                                         const TimeVertexSignal& history, std::size_t k)
{
    const NoncausalPredictor predictor(jpsd, basis, Eigen::VectorXd::Zero(jpsd.vertices()));
    return predictor.predict(history, k);
}

} // namespace tvarma
