#pragma once

// Joint causal (time-vertex ARMA) models
//
//     sum_p a_p(L) x_{t-p} = sum_q b_q(L) e_{t-q},
//
// with matrix coefficients diagonalized by the graph basis. After rotating
// the data by U_G^T the model splits into one scalar ARMA(P, Q) per graph
// frequency, which is how it is both estimated and evaluated here. Fitting
// can be restricted to the K frequencies carrying the most energy; the other
// frequencies are forecast as zero.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvarma/arma.hpp"
#include "tvarma/errors.hpp"
#include "tvarma/spectral.hpp"

namespace tvarma {

/// Per-frequency energies sum_t x_hat_t(n)^2.
struct EnergySpectrum {
    Eigen::VectorXd energy;

    double total() const { return energy.sum(); }
};

inline EnergySpectrum energy_spectrum(const EigenBasis& basis, const TimeVertexSignal& x)
{
    const Eigen::MatrixXd x_hat = gft(basis, x);
    return {x_hat.rowwise().squaredNorm()};
}

/// Which frequencies (or nodes) a fit keeps.
class Selection {
public:
    enum class Kind { all, count, fraction };

    static Selection all() { return Selection(Kind::all, 0, 1.0); }
    static Selection top(std::size_t count) { return Selection(Kind::count, count, 0.0); }
    /// Smallest top-energy set holding at least `rho` of the total energy.
    static Selection variance(double rho) { return Selection(Kind::fraction, 0, rho); }

    Kind kind() const noexcept { return kind_; }
    std::size_t count() const noexcept { return count_; }
    double fraction() const noexcept { return fraction_; }

private:
    Selection(Kind kind, std::size_t count, double fraction)
        : kind_(kind), count_(count), fraction_(fraction) {}

    Kind kind_;
    std::size_t count_;
    double fraction_;
};

/// Indices (ascending) of the selected entries of an energy vector. Entries
/// are ranked by decreasing energy with ties going to the lower index.
inline std::vector<std::size_t> select_top_k(const Eigen::VectorXd& energy, const Selection& criterion)
{
    const auto n = static_cast<std::size_t>(energy.size());
    detail::require(n > 0, "cannot select from an empty spectrum");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&energy](std::size_t a, std::size_t b) {
        return energy(static_cast<Eigen::Index>(a)) > energy(static_cast<Eigen::Index>(b));
    });

    std::size_t keep = n;
    switch (criterion.kind()) {
    case Selection::Kind::all:
        break;
    case Selection::Kind::count:
        detail::require(criterion.count() >= 1 && criterion.count() <= n,
                        "rank K must satisfy 1 <= K <= N");
        keep = criterion.count();
        break;
    case Selection::Kind::fraction: {
        const double rho = criterion.fraction();
        detail::require(rho > 0.0 && rho <= 1.0, "variance fraction must lie in (0, 1]");
        if (rho >= 1.0) break;
        double total = 0.0;
        for (auto i : order) total += energy(static_cast<Eigen::Index>(i));
        double running = 0.0;
        keep = 0;
        while (keep < n && (keep == 0 || running < rho * total)) {
            running += energy(static_cast<Eigen::Index>(order[keep]));
            ++keep;
        }
        break;
    }
    }
    std::vector<std::size_t> selected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(selected.begin(), selected.end());
    return selected;
}

inline std::vector<std::size_t> select_top_k(const EnergySpectrum& spectrum, const Selection& criterion)
{
    return select_top_k(spectrum.energy, criterion);
}

/// Per-row temporal mean of a signal.
inline Eigen::VectorXd row_means(const TimeVertexSignal& x)
{
    detail::require(x.cols() > 0, "signal has no time steps");
    return x.rowwise().mean();
}

class JointCausalModel {
public:
    JointCausalModel() = default;

    /// Assembles a model from known parts. `models[i]` belongs to frequency
    /// `selected[i]`; every model must have orders (P, Q).
    JointCausalModel(EigenBasis basis, std::vector<std::size_t> selected,
                     std::vector<ArmaModel> models, Eigen::VectorXd mean, std::size_t p,
                     std::size_t q, double retained_variance = 1.0)
        : basis_(std::move(basis)), selected_(std::move(selected)), models_(std::move(models)),
          mean_(std::move(mean)), p_(p), q_(q), retained_(retained_variance)
    {
        const auto n = basis_.size();
        detail::require(static_cast<std::size_t>(mean_.size()) == n, "mean must have one entry per vertex");
        detail::require(selected_.size() == models_.size(), "every selected frequency needs a model");
        detail::require(!selected_.empty() && selected_.size() <= n, "selection size must be in [1, N]");
        detail::require(std::is_sorted(selected_.begin(), selected_.end()) &&
                            std::adjacent_find(selected_.begin(), selected_.end()) == selected_.end(),
                        "selected frequencies must be distinct and ascending");
        detail::require(selected_.back() < n, "selected frequency out of range");
        for (const auto& m : models_)
            detail::require(m.p() == p_ && m.q() == q_, "all frequency models must share the orders (P, Q)");
    }

    const EigenBasis& basis() const noexcept { return basis_; }
    const std::vector<std::size_t>& selected() const noexcept { return selected_; }
    const std::vector<ArmaModel>& models() const noexcept { return models_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    std::size_t p() const noexcept { return p_; }
    std::size_t q() const noexcept { return q_; }
    std::size_t vertices() const noexcept { return basis_.size(); }
    std::size_t rank() const noexcept { return selected_.size(); }

    /// Fraction of the training energy held by the selected frequencies
    /// (1 when unknown, e.g. for hand-assembled models).
    double retained_variance() const noexcept { return retained_; }

    /// Model of frequency `n`, or nullptr when `n` is outside the selection.
    const ArmaModel* model_for(std::size_t n) const
    {
        const auto it = std::lower_bound(selected_.begin(), selected_.end(), n);
        if (it == selected_.end() || *it != n) return nullptr;
        return &models_[static_cast<std::size_t>(it - selected_.begin())];
    }

    /// Vertex-domain matrix coefficient a_p(L) = U diag(a_p(n)) U^T (p >= 1);
    /// frequencies outside the selection contribute zero.
    Eigen::MatrixXd ar_matrix(std::size_t lag) const { return coefficient_matrix(lag, true); }
    /// Vertex-domain matrix coefficient b_q(L) = U diag(b_q(n)) U^T (q >= 1).
    Eigen::MatrixXd ma_matrix(std::size_t lag) const { return coefficient_matrix(lag, false); }

    /// One-step residuals x_t - x~_t of the demeaned history, in the vertex
    /// domain. Frequencies outside the selection have x~ = 0.
    TimeVertexSignal residuals(const TimeVertexSignal& history) const
    {
        check_history(history);
        Eigen::MatrixXd x_hat = gft(basis_, history.colwise() - mean_);
        for (std::size_t i = 0; i < selected_.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(selected_[i]);
            const Eigen::VectorXd series = x_hat.row(row).transpose();
            const auto e = tvarma::residuals(models_[i], {series.data(), static_cast<std::size_t>(series.size())});
            x_hat.row(row) = Eigen::Map<const Eigen::RowVectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
        }
        return igft(basis_, x_hat);
    }

    /// Forecasts the next `k` graph signals after `history` (N x k).
    Eigen::MatrixXd predict(const TimeVertexSignal& history, std::size_t k) const
    {
        detail::require(k >= 1, "forecast horizon must be at least one step");
        check_history(history);
        const Eigen::MatrixXd x_hat = gft(basis_, history.colwise() - mean_);
        Eigen::MatrixXd forecast_hat = Eigen::MatrixXd::Zero(x_hat.rows(), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < selected_.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(selected_[i]);
            const Eigen::VectorXd series = x_hat.row(row).transpose();
            const std::span<const double> view(series.data(), static_cast<std::size_t>(series.size()));
            const auto e = tvarma::residuals(models_[i], view);
            const auto f = k_step_forecast(models_[i], view, e, k);
            for (std::size_t s = 0; s < k; ++s) forecast_hat(row, static_cast<Eigen::Index>(s)) = f[s];
        }
        return igft(basis_, forecast_hat).colwise() + mean_;
    }

private:
    void check_history(const TimeVertexSignal& history) const
    {
        detail::require_vertices(basis_, history.rows());
        detail::require(static_cast<std::size_t>(history.cols()) >= std::max(p_, q_) + 1,
                        "insufficient history: need at least max(P, Q) + 1 columns");
    }

    Eigen::MatrixXd coefficient_matrix(std::size_t lag, bool autoregressive) const
    {
        const auto n = static_cast<Eigen::Index>(basis_.size());
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < selected_.size(); ++i) {
            const auto& coef = autoregressive ? models_[i].ar : models_[i].ma;
            detail::require(lag >= 1 && lag <= coef.size(), "coefficient lag out of range");
            diag(static_cast<Eigen::Index>(selected_[i])) = coef[lag - 1];
        }
        return basis_.eigenvectors * diag.asDiagonal() * basis_.eigenvectors.transpose();
    }

    EigenBasis basis_;
    std::vector<std::size_t> selected_;
    std::vector<ArmaModel> models_;
    Eigen::VectorXd mean_;
    std::size_t p_ = 0;
    std::size_t q_ = 0;
    double retained_ = 1.0;
};

/// Fits a joint causal model: removes the per-vertex mean, rotates by U_G^T,
/// picks the frequencies named by `criterion`, and fits an ARMA(P, Q) to each
/// selected frequency independently.
inline JointCausalModel fit_joint_causal(const TimeVertexSignal& x_train, const EigenBasis& basis,
                                         std::size_t p, std::size_t q,
                                         const Selection& criterion = Selection::all(),
                                         const ArmaFitOptions& options = {})
{
    detail::require_vertices(basis, x_train.rows());
    detail::require(static_cast<std::size_t>(x_train.cols()) >= 10 * (p + q + 1),
                    "training window too short: need T >= 10 (P + Q + 1)");
    detail::require(x_train.allFinite(), "training signal must be finite");

    Eigen::VectorXd mean = row_means(x_train);
    const Eigen::MatrixXd x_hat = gft(basis, x_train.colwise() - mean);
    const Eigen::VectorXd energy = x_hat.rowwise().squaredNorm();
    auto selected = select_top_k(energy, criterion);

    std::vector<ArmaModel> models;
    models.reserve(selected.size());
    double kept = 0.0;
    for (auto n : selected) {
        const auto row = static_cast<Eigen::Index>(n);
        kept += energy(row);
        const Eigen::VectorXd series = x_hat.row(row).transpose();
        try {
            models.push_back(fit_arma({series.data(), static_cast<std::size_t>(series.size())}, p, q, options));
        } catch (const usage_error& err) {
            std::ostringstream msg;
            msg << "graph frequency " << n << ": " << err.what();
            throw usage_error(msg.str());
        } catch (const numerical_error& err) {
            std::ostringstream msg;
            msg << "graph frequency " << n << ": " << err.what();
            throw numerical_error(msg.str());
        }
    }

    const double total = energy.sum();
    return {basis, std::move(selected), std::move(models), std::move(mean), p, q,
            total > 0.0 ? kept / total : 1.0};
}

} // namespace tvarma
