#pragma once

// Synthetic time-vertex processes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "tvarma/errors.hpp"
#include "tvarma/graph.hpp"
#include "tvarma/spectral.hpp"

namespace tvarma {

/// Matrix of i.i.d. standard normal draws, filled column by column.
inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = normal(rng);
    return out;
}

/// JWSS realization with JPSD sampled on the N x T grid: white Gaussian
/// noise passed through the joint filter sqrt(h).
inline TimeVertexSignal generate_jwss(const EigenBasis& basis, const Eigen::MatrixXd& jpsd,
                                      std::uint64_t seed)
{
    detail::require_vertices(basis, jpsd.rows());
    detail::require(jpsd.allFinite(), "JPSD must be finite");
    for (Eigen::Index tau = 0; tau < jpsd.cols(); ++tau) {
        for (Eigen::Index n = 0; n < jpsd.rows(); ++n) {
            if (jpsd(n, tau) < 0.0) {
                std::ostringstream msg;
                msg << "JPSD is negative at (n=" << n << ", tau=" << tau << ")";
                throw usage_error(msg.str());
            }
        }
    }
    const Eigen::MatrixXd noise = standard_normal(jpsd.rows(), jpsd.cols(), seed);
    return apply_joint_response(basis, jpsd.cwiseSqrt(), noise);
}

/// JWSS realization of length `steps` for a JPSD function h(lambda, w).
/// h should be even in w (h(l, w) = h(l, 2 pi - w)) for the output
/// covariance to match h exactly.
template <class Response>
    requires std::invocable<Response, double, double>
TimeVertexSignal generate_jwss(const EigenBasis& basis, Response&& h, Eigen::Index steps,
                               std::uint64_t seed)
{
    detail::require(steps >= 1, "number of time steps must be positive");
    return generate_jwss(basis, sample_joint_response(basis, steps, h), seed);
}

struct WaveOptions {
    double speed = 0.0;          ///< wave speed c; 0 selects 2 / sqrt(lambda_max)
    double noise_std = 1.0;
    Eigen::Index burn_in = 50;
};

/// Default wave speed: c = 2 / sqrt(lambda_max).
inline double default_wave_speed(const EigenBasis& basis)
{
    const double lmax = basis.size() ? basis.eigenvalues.maxCoeff() : 0.0;
    return lmax > 0.0 ? 2.0 / std::sqrt(lmax) : 1.0;
}

struct WaveSimulation {
    TimeVertexSignal signal;        ///< N x T vertex-domain output
    Eigen::MatrixXd innovations;    ///< N x T spectral-domain driving noise
    double speed = 0.0;
};

/// Seed of the spectral noise stream driving graph frequency `n`.
inline std::uint64_t frequency_seed(std::uint64_t seed, std::size_t n)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(n), 0x9e3779b9u};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

/// Discrete wave equation driven by white noise, propagated exactly in the
/// graph spectral domain:
///   x_hat_{t+1}(n) = 2 cos(c sqrt(lambda_n)) x_hat_t(n) - x_hat_{t-1}(n) + e_hat_t(n)
/// from zero initial conditions; the first `burn_in` steps are discarded.
/// Each frequency draws from its own seeded stream.
inline WaveSimulation simulate_wave(const EigenBasis& basis, Eigen::Index steps, std::uint64_t seed,
                                    WaveOptions options = {})
{
    detail::require(steps >= 3, "wave simulation needs at least 3 time steps");
    detail::require(options.noise_std >= 0.0, "noise standard deviation must be nonnegative");
    detail::require(options.burn_in >= 0, "burn-in must be nonnegative");
    const double c = options.speed > 0.0 ? options.speed : default_wave_speed(basis);
    const auto n = static_cast<Eigen::Index>(basis.size());
    const double lmax = n ? std::max(basis.eigenvalues.maxCoeff(), 0.0) : 0.0;
    if (!(c * std::sqrt(lmax) < std::numbers::pi)) {
        std::ostringstream msg;
        msg << "aliasing guard violated: c * sqrt(lambda_max) = " << c * std::sqrt(lmax)
            << " >= pi; use a wave speed below " << std::numbers::pi / std::sqrt(lmax);
        throw usage_error(msg.str());
    }

    const Eigen::Index total = steps + options.burn_in;
    WaveSimulation out;
    out.speed = c;
    out.innovations.resize(n, steps);
    Eigen::MatrixXd trajectory(n, steps);
    for (Eigen::Index k = 0; k < n; ++k) {
        std::mt19937_64 rng(frequency_seed(seed, static_cast<std::size_t>(k)));
        std::normal_distribution<double> normal(0.0, 1.0);
        const double coupling = 2.0 * std::cos(c * std::sqrt(std::max(basis.eigenvalues(k), 0.0)));
        double previous = 0.0;
        double current = 0.0;
        for (Eigen::Index t = 0; t < total; ++t) {
            const double e = options.noise_std * normal(rng);
            const double next = coupling * current - previous + e;
            previous = current;
            current = next;
            if (t >= options.burn_in) {
                trajectory(k, t - options.burn_in) = next;
                out.innovations(k, t - options.burn_in) = e;
            }
        }
    }
    out.signal = igft(basis, trajectory);
    return out;
}

inline TimeVertexSignal generate_wave(const EigenBasis& basis, Eigen::Index steps, std::uint64_t seed,
                                      WaveOptions options = {})
{
    return simulate_wave(basis, steps, seed, options).signal;
}

inline TimeVertexSignal generate_wave(const Graph& graph, Eigen::Index steps, std::uint64_t seed,
                                      WaveOptions options = {})
{
    return generate_wave(eigendecompose(laplacian(graph)), steps, seed, options);
}

} // namespace tvarma
