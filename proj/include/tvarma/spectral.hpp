#pragma once

// Symmetric eigendecomposition, graph and joint (time-vertex) Fourier
// transforms, and joint filtering.
//
// Conventions: the graph basis U_G has orthonormal columns paired with
// ascending eigenvalues. The DFT matrix is unitary with
// [U_T]_{t,tau} = exp(j w_tau t) / sqrt(T), w_tau = 2 pi tau / T, and the
// joint transform is  X_hat = U_G^T X conj(U_T).

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "tvarma/errors.hpp"
#include "tvarma/graph.hpp"

namespace tvarma {

/// N x T real matrix; column t is the graph signal observed at time t.
using TimeVertexSignal = Eigen::MatrixXd;

/// Orthonormal eigenvectors (columns) paired with ascending eigenvalues.
struct EigenBasis {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }

    /// Basis of the identity operator; turns every transform into a no-op.
    static EigenBasis identity(std::size_t n)
    {
        return {Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)),
                Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                          static_cast<Eigen::Index>(n))};
    }

    /// FNV-1a hash of the raw bytes of eigenvalues then eigenvectors
    /// (column-major). Used to pair serialized models with their basis.
    std::uint64_t checksum() const noexcept
    {
        std::uint64_t hash = 14695981039346656037ull;
        auto mix = [&hash](const double* data, Eigen::Index count) {
            for (Eigen::Index k = 0; k < count; ++k) {
                unsigned char bytes[sizeof(double)];
                std::memcpy(bytes, data + k, sizeof(double));
                for (unsigned char b : bytes) {
                    hash ^= b;
                    hash *= 1099511628211ull;
                }
            }
        };
        mix(eigenvalues.data(), eigenvalues.size());
        mix(eigenvectors.data(), eigenvectors.size());
        return hash;
    }
};

/// Joint spectrum X_hat(n, tau) with its angular frequency grid.
struct JointSpectrum {
    Eigen::MatrixXcd coefficients;

    Eigen::Index vertices() const noexcept { return coefficients.rows(); }
    Eigen::Index steps() const noexcept { return coefficients.cols(); }

    Eigen::VectorXd omega() const
    {
        const auto t = steps();
        Eigen::VectorXd w(t);
        for (Eigen::Index k = 0; k < t; ++k)
            w(k) = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(t);
        return w;
    }

    /// Eigenvalues of the cyclic lag operator, exp(-j w_tau).
    Eigen::VectorXcd lag_eigenvalues() const
    {
        const Eigen::VectorXd w = omega();
        Eigen::VectorXcd out(w.size());
        for (Eigen::Index k = 0; k < w.size(); ++k) out(k) = std::polar(1.0, -w(k));
        return out;
    }
};

/// Angular frequency of DFT bin `tau` on a grid of `steps` samples.
inline double angular_frequency(Eigen::Index tau, Eigen::Index steps)
{
    return 2.0 * std::numbers::pi * static_cast<double>(tau) / static_cast<double>(steps);
}

/// Eigendecomposition of a symmetric PSD operator by cyclic Jacobi rotations.
/// Converges when the off-diagonal Frobenius norm drops to tol * ||L||_F;
/// gives up after 100 sweeps. Each eigenvector is signed so that its entry of
/// largest magnitude (first one, on ties) is positive.
inline EigenBasis eigendecompose(const OperatorMatrix& op, double tol = 1e-12)
{
    constexpr int max_sweeps = 100;
    detail::require(op.rows() == op.cols(), "operator must be square");
    detail::require(op.allFinite(), "operator must be finite");
    const Eigen::Index n = op.rows();
    const double norm = op.norm();
    detail::require((op - op.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(norm, 1e-300) ||
                        norm == 0.0,
                    "operator must be symmetric");

    Eigen::MatrixXd a = 0.5 * (op + op.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    auto off_diagonal = [&a, n] {
        double s = 0.0;
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index r = 0; r < n; ++r)
                if (r != c) s += a(r, c) * a(r, c);
        return std::sqrt(s);
    };

    double off = off_diagonal();
    int sweep = 0;
    while (off > tol * norm) {
        if (++sweep > max_sweeps) {
            std::ostringstream msg;
            msg << "Jacobi eigensolver did not converge after " << max_sweeps
                << " sweeps (off-diagonal residual " << off << ")";
            throw numerical_error(msg.str());
        }
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = 0.0;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = (theta >= 0.0 ? 1.0 : -1.0) /
                        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(p, r) = a(r, p);
                    a(r, q) = s * arp + c * arq;
                    a(q, r) = a(r, q);
                }
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
        off = off_diagonal();
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&a](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

    EigenBasis basis{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        basis.eigenvalues(k) = a(src, src);
        Eigen::VectorXd col = v.col(src);
        const double peak = col.cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < n; ++r) {
            if (std::abs(col(r)) >= peak * (1.0 - 1e-12)) {
                if (col(r) < 0.0) col = -col;
                break;
            }
        }
        basis.eigenvectors.col(k) = col;
    }

    if (n > 0) {
        const double scale = basis.eigenvalues.cwiseAbs().maxCoeff();
        if (basis.eigenvalues(0) < -1e-9 * scale) {
            std::ostringstream msg;
            msg << "operator is not positive semi-definite (smallest eigenvalue "
                << basis.eigenvalues(0) << ")";
            throw usage_error(msg.str());
        }
    }
    return basis;
}

namespace detail {

inline void require_vertices(const EigenBasis& basis, Eigen::Index rows)
{
    if (static_cast<Eigen::Index>(basis.size()) != rows) {
        std::ostringstream msg;
        msg << "dimension mismatch: basis has " << basis.size() << " vertices, signal has "
            << rows << " rows";
        throw usage_error(msg.str());
    }
}

/// Twiddle table exp(sign * j 2 pi m / T), m = 0..T-1.
inline std::vector<std::complex<double>> twiddles(Eigen::Index steps, double sign)
{
    std::vector<std::complex<double>> w(static_cast<std::size_t>(steps));
    for (Eigen::Index m = 0; m < steps; ++m)
        w[static_cast<std::size_t>(m)] = std::polar(1.0, sign * angular_frequency(m, steps));
    return w;
}

/// Unitary DFT along rows: out(n, tau) = sum_t in(n, t) exp(sign j w_tau t) / sqrt(T).
template <class Derived>
Eigen::MatrixXcd dft_rows(const Eigen::MatrixBase<Derived>& in, double sign)
{
    const Eigen::Index rows = in.rows();
    const Eigen::Index steps = in.cols();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows, steps);
    if (steps == 0) return out;
    const auto w = twiddles(steps, sign);
    const double scale = 1.0 / std::sqrt(static_cast<double>(steps));
    for (Eigen::Index tau = 0; tau < steps; ++tau) {
        for (Eigen::Index t = 0; t < steps; ++t) {
            const auto twiddle = w[static_cast<std::size_t>((tau * t) % steps)];
            for (Eigen::Index r = 0; r < rows; ++r) out(r, tau) += in(r, t) * twiddle;
        }
    }
    return out * scale;
}

} // namespace detail

/// Unitary DFT matrix [U_T]_{t,tau} = exp(j w_tau t) / sqrt(T).
inline Eigen::MatrixXcd dft_matrix(Eigen::Index steps)
{
    Eigen::MatrixXcd u(steps, steps);
    const double scale = 1.0 / std::sqrt(static_cast<double>(steps));
    for (Eigen::Index t = 0; t < steps; ++t)
        for (Eigen::Index tau = 0; tau < steps; ++tau)
            u(t, tau) = std::polar(scale, angular_frequency((t * tau) % steps, steps));
    return u;
}

/// Graph Fourier transform U_G^T X.
inline Eigen::MatrixXd gft(const EigenBasis& basis, const Eigen::MatrixXd& x)
{
    detail::require_vertices(basis, x.rows());
    return basis.eigenvectors.transpose() * x;
}

/// Inverse graph Fourier transform U_G X_hat.
inline TimeVertexSignal igft(const EigenBasis& basis, const Eigen::MatrixXd& x_hat)
{
    detail::require_vertices(basis, x_hat.rows());
    return basis.eigenvectors * x_hat;
}

/// Joint Fourier transform U_G^T X conj(U_T).
inline JointSpectrum jft(const EigenBasis& basis, const TimeVertexSignal& x)
{
    detail::require_vertices(basis, x.rows());
    return {detail::dft_rows(gft(basis, x), -1.0)};
}

/// Inverse joint transform without discarding the imaginary part.
inline Eigen::MatrixXcd ijft_complex(const EigenBasis& basis, const JointSpectrum& s)
{
    detail::require_vertices(basis, s.vertices());
    const Eigen::MatrixXcd time = detail::dft_rows(s.coefficients, +1.0);
    return basis.eigenvectors.cast<std::complex<double>>() * time;
}

/// Inverse joint transform; returns the real part. For spectra with conjugate
/// symmetry along tau the discarded imaginary part is rounding noise.
inline TimeVertexSignal ijft(const EigenBasis& basis, const JointSpectrum& s)
{
    return ijft_complex(basis, s).real();
}

/// Evaluate a joint response h(lambda_n, w_tau) on the N x T grid.
template <class Response>
    requires std::invocable<Response, double, double>
Eigen::MatrixXd sample_joint_response(const EigenBasis& basis, Eigen::Index steps, Response&& h)
{
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd out(n, steps);
    for (Eigen::Index tau = 0; tau < steps; ++tau) {
        const double w = angular_frequency(tau, steps);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double value = static_cast<double>(h(basis.eigenvalues(k), w));
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "joint filter is not finite at (n=" << k << ", tau=" << tau << ")";
                throw usage_error(msg.str());
            }
            out(k, tau) = value;
        }
    }
    return out;
}

/// Joint filtering with a response sampled on the N x T grid.
inline TimeVertexSignal apply_joint_response(const EigenBasis& basis,
                                             const Eigen::MatrixXd& response,
                                             const TimeVertexSignal& x)
{
    detail::require(response.rows() == x.rows() && response.cols() == x.cols(),
                    "joint response must match the signal dimensions");
    for (Eigen::Index tau = 0; tau < response.cols(); ++tau) {
        for (Eigen::Index k = 0; k < response.rows(); ++k) {
            if (!std::isfinite(response(k, tau))) {
                std::ostringstream msg;
                msg << "joint filter is not finite at (n=" << k << ", tau=" << tau << ")";
                throw usage_error(msg.str());
            }
        }
    }
    JointSpectrum s = jft(basis, x);
    s.coefficients.array() *= response.array().cast<std::complex<double>>();
    return ijft(basis, s);
}

/// Joint filtering h(L_J) x = U_J h(Lambda_G, Omega) U_J^* x with h(lambda, w).
template <class Response>
    requires std::invocable<Response, double, double>
TimeVertexSignal apply_joint_filter(const EigenBasis& basis, Response&& h,
                                    const TimeVertexSignal& x)
{
    detail::require_vertices(basis, x.rows());
    return apply_joint_response(basis, sample_joint_response(basis, x.cols(), h), x);
}

} // namespace tvarma
