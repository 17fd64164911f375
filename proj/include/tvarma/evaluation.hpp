#pragma once

// Rolling-origin forecast evaluation: split a signal in two halves, fit on the
// first, then forecast 1..k_max steps ahead from every test origin and record
// the relative error ||x~_{t+k|t} - x_{t+k}|| / ||x_{t+k}||.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvarma/baselines.hpp"
#include "tvarma/errors.hpp"
#include "tvarma/joint_causal.hpp"
#include "tvarma/spectral.hpp"

namespace tvarma {

/// Maps an observed history (N x t) and a horizon k to an N x k forecast.
using Forecaster = std::function<Eigen::MatrixXd(const TimeVertexSignal&, std::size_t)>;

/// First ceil(T/2) columns train, the rest test.
inline std::pair<TimeVertexSignal, TimeVertexSignal> split_train_test(const TimeVertexSignal& x)
{
    detail::require(x.cols() >= 2, "need at least two time steps to split");
    const Eigen::Index train = (x.cols() + 1) / 2;
    return {x.leftCols(train), x.rightCols(x.cols() - train)};
}

inline Eigen::Index train_length(Eigen::Index steps) { return (steps + 1) / 2; }

struct StepStats {
    std::size_t step = 0;
    std::vector<double> errors;   ///< one per evaluated origin, in origin order
    std::size_t skipped = 0;      ///< origins whose target had zero norm
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct ForecastReport {
    std::string model;
    std::vector<StepStats> steps;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    std::optional<double> variance_retained;
    std::optional<std::size_t> rank;
};

inline double median_of(std::vector<double> values)
{
    if (values.empty()) return std::nan("");
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

inline void summarize(StepStats& s)
{
    const auto& e = s.errors;
    if (e.empty()) {
        s.median = s.mean = s.stddev = std::nan("");
        return;
    }
    s.median = median_of(e);
    s.mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    double ss = 0.0;
    for (double v : e) ss += (v - s.mean) * (v - s.mean);
    s.stddev = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1)) : 0.0;
}

/// Rolling evaluation of a forecaster already fitted on the training half.
/// Origins are t = T_train + 1 .. T - 1 observed columns; step k is scored
/// whenever t + k <= T.
inline ForecastReport evaluate(const Forecaster& forecaster, const TimeVertexSignal& x,
                               std::size_t k_max)
{
    const Eigen::Index total = x.cols();
    const Eigen::Index train = train_length(total);
    const auto test = static_cast<std::size_t>(total - train);
    detail::require(k_max >= 1, "k_max must be at least 1");
    if (k_max >= test) {
        std::ostringstream msg;
        msg << "k_max (" << k_max << ") must be smaller than the test length (" << test << ")";
        throw usage_error(msg.str());
    }

    ForecastReport report;
    report.steps.resize(k_max);
    for (std::size_t k = 0; k < k_max; ++k) report.steps[k].step = k + 1;

    const auto start = std::chrono::steady_clock::now();
    for (Eigen::Index origin = train + 1; origin < total; ++origin) {
        const auto horizon = std::min<std::size_t>(k_max, static_cast<std::size_t>(total - origin));
        const Eigen::MatrixXd forecast = forecaster(x.leftCols(origin), horizon);
        for (std::size_t k = 1; k <= horizon; ++k) {
            const auto target = x.col(origin + static_cast<Eigen::Index>(k) - 1);
            const double norm = target.norm();
            auto& stats = report.steps[k - 1];
            if (norm == 0.0) {
                ++stats.skipped;
                continue;
            }
            stats.errors.push_back((forecast.col(static_cast<Eigen::Index>(k) - 1) - target).norm() / norm);
        }
    }
    report.predict_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& s : report.steps) summarize(s);
    return report;
}

enum class ModelKind { joint, disjoint, noncausal };

inline std::string to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::joint: return "joint";
    case ModelKind::disjoint: return "disjoint";
    case ModelKind::noncausal: return "noncausal";
    }
    return "unknown";
}

inline ModelKind parse_model_kind(const std::string& name)
{
    if (name == "joint") return ModelKind::joint;
    if (name == "disjoint") return ModelKind::disjoint;
    if (name == "noncausal") return ModelKind::noncausal;
    throw usage_error("unknown model kind '" + name + "' (expected joint, disjoint or noncausal)");
}

struct ExperimentOptions {
    std::size_t p = 2;
    std::size_t q = 0;
    Selection selection = Selection::all();
    Eigen::Index window = 64;     ///< JPSD window for the non-causal model
    std::size_t k_max = 5;
};

/// Fits `kind` on the training half of `x` (and nothing else), then runs the
/// rolling evaluation over the test half.
inline ForecastReport run_experiment(ModelKind kind, const TimeVertexSignal& x, const EigenBasis& basis,
                                     const ExperimentOptions& options)
{
    const TimeVertexSignal train = x.leftCols(train_length(x.cols()));
    Forecaster forecaster;
    std::optional<double> retained;
    std::optional<std::size_t> rank;

    const auto start = std::chrono::steady_clock::now();
    switch (kind) {
    case ModelKind::joint: {
        auto model = fit_joint_causal(train, basis, options.p, options.q, options.selection);
        retained = model.retained_variance();
        rank = model.rank();
        forecaster = [m = std::move(model)](const TimeVertexSignal& h, std::size_t k) { return m.predict(h, k); };
        break;
    }
    case ModelKind::disjoint: {
        auto model = fit_disjoint(train, options.p, options.q, options.selection);
        rank = model.selected.size();
        forecaster = [m = std::move(model)](const TimeVertexSignal& h, std::size_t k) { return m.predict(h, k); };
        break;
    }
    case ModelKind::noncausal: {
        const Eigen::VectorXd mean = row_means(train);
        auto jpsd = estimate_jpsd(train.colwise() - mean, basis, options.window);
        auto predictor = std::make_shared<NoncausalPredictor>(std::move(jpsd), basis, mean);
        predictor->gain(options.k_max);
        forecaster = [predictor, k_max = options.k_max](const TimeVertexSignal& h, std::size_t k) {
            // One gain serves every horizon up to k_max.
            return Eigen::MatrixXd(predictor->predict(h, k_max).leftCols(static_cast<Eigen::Index>(k)));
        };
        break;
    }
    }
    const double fit_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ForecastReport report = evaluate(forecaster, x, options.k_max);
    report.model = to_string(kind);
    report.fit_seconds = fit_seconds;
    report.variance_retained = retained;
    report.rank = rank;
    return report;
}

struct OrderChoice {
    std::size_t p = 0;
    std::size_t q = 0;
    double error = 0.0;   ///< median 1-step validation error
};

/// Exhaustive (P, Q) search on the training half only: each candidate is fit
/// on the first half of the training columns and scored by its median 1-step
/// error on the rest. Ties keep the smaller P + Q.
inline OrderChoice select_orders(ModelKind kind, const TimeVertexSignal& x, const EigenBasis& basis,
                                 std::size_t max_order = 2, Selection selection = Selection::all())
{
    detail::require(kind != ModelKind::noncausal, "order selection applies to causal models only");
    const TimeVertexSignal train = x.leftCols(train_length(x.cols()));
    ExperimentOptions opts;
    opts.k_max = 1;
    opts.selection = selection;
    std::optional<OrderChoice> best;
    for (std::size_t order = 0; order <= 2 * max_order; ++order) {
        for (std::size_t p = 0; p <= std::min(order, max_order); ++p) {
            const std::size_t q = order - p;
            if (q > max_order) continue;
            opts.p = p;
            opts.q = q;
            ForecastReport r;
            try {
                r = run_experiment(kind, train, basis, opts);
            } catch (const usage_error&) {
                continue;   // too few validation columns for this order
            }
            const double e = r.steps[0].median;
            if (!best || e < best->error) best = OrderChoice{p, q, e};
        }
    }
    if (!best) throw usage_error("training half too short for order selection");
    return *best;
}

struct LowRankRow {
    double fraction_ignored = 0.0;
    std::size_t joint_rank = 0;
    double joint_error = 0.0;          ///< median 2-step relative error
    double joint_fit_seconds = 0.0;
    double joint_ignored = 0.0;        ///< realized ignored fraction of training energy
    std::size_t disjoint_rank = 0;
    double disjoint_error = 0.0;
    double disjoint_fit_seconds = 0.0;
    double disjoint_ignored = 0.0;
};

/// Sweeps low-rank fits that ignore the given fractions of the training
/// energy: graph-spectral truncation (joint) against keeping the
/// highest-energy vertices (disjoint). Fit times are the best of `repeats`.
inline std::vector<LowRankRow> lowrank_sweep(const TimeVertexSignal& x, const EigenBasis& basis,
                                             const std::vector<double>& fractions, std::size_t p,
                                             std::size_t q, std::size_t repeats = 3)
{
    detail::require(repeats >= 1, "repeats must be positive");
    const TimeVertexSignal train = x.leftCols(train_length(x.cols()));
    const Eigen::VectorXd mean = row_means(train);
    const Eigen::MatrixXd centered = train.colwise() - mean;
    const Eigen::VectorXd spectral_energy = gft(basis, centered).rowwise().squaredNorm();
    const Eigen::VectorXd native_energy = centered.rowwise().squaredNorm();

    auto ignored = [](const Eigen::VectorXd& energy, const std::vector<std::size_t>& kept) {
        double k = 0.0;
        for (auto i : kept) k += energy(static_cast<Eigen::Index>(i));
        const double total = energy.sum();
        return total > 0.0 ? std::max(0.0, 1.0 - k / total) : 0.0;
    };
    auto time_best = [repeats](auto&& fit) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto start = std::chrono::steady_clock::now();
            fit();
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        }
        return best;
    };

    std::vector<LowRankRow> rows;
    for (double fraction : fractions) {
        detail::require(fraction >= 0.0 && fraction < 1.0, "ignored fraction must lie in [0, 1)");
        const Selection selection = Selection::variance(1.0 - fraction);
        LowRankRow row;
        row.fraction_ignored = fraction;

        JointCausalModel joint;
        row.joint_fit_seconds = time_best([&] { joint = fit_joint_causal(train, basis, p, q, selection); });
        row.joint_rank = joint.rank();
        row.joint_ignored = ignored(spectral_energy, joint.selected());
        const auto joint_report = evaluate(
            [&joint](const TimeVertexSignal& h, std::size_t k) { return joint.predict(h, k); }, x, 2);
        row.joint_error = joint_report.steps[1].median;

        DisjointModel disjoint;
        row.disjoint_fit_seconds = time_best([&] { disjoint = fit_disjoint(train, p, q, selection); });
        row.disjoint_rank = disjoint.selected.size();
        row.disjoint_ignored = ignored(native_energy, disjoint.selected);
        const auto disjoint_report = evaluate(
            [&disjoint](const TimeVertexSignal& h, std::size_t k) { return disjoint.predict(h, k); }, x, 2);
        row.disjoint_error = disjoint_report.steps[1].median;

        rows.push_back(row);
    }
    return rows;
}

} // namespace tvarma
