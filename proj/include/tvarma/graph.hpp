#pragma once

// Weighted undirected graphs and their combinatorial Laplacian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvarma/errors.hpp"

namespace tvarma {

/// Dense symmetric positive semi-definite operator (a Laplacian or any
/// user-supplied PSD matrix representing the graph).
using OperatorMatrix = Eigen::MatrixXd;

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Edge kernel used by the graph builders. The Gaussian kernel uses
/// exp(-d^2 / sigma^2) with sigma the mean length of the selected edges.
enum class WeightKernel { gaussian, unit };

/// Immutable weighted undirected graph. Each undirected edge is stored once
/// with i < j; coordinates are optional (one row per vertex).
class Graph {
public:
    Graph() = default;

    Graph(std::size_t n, std::vector<Edge> edges, Eigen::MatrixXd coords = {})
        : n_(n), edges_(std::move(edges)), coords_(std::move(coords))
    {
        for (auto& e : edges_) {
            detail::require(e.i < n_ && e.j < n_, "edge endpoint out of range");
            detail::require(e.i != e.j, "self-loops are not allowed");
            detail::require(std::isfinite(e.weight) && e.weight >= 0.0,
                            "edge weights must be finite and nonnegative");
            if (e.i > e.j) std::swap(e.i, e.j);
        }
        std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
            return std::pair(a.i, a.j) < std::pair(b.i, b.j);
        });
        for (std::size_t k = 1; k < edges_.size(); ++k) {
            if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j) {
                std::ostringstream msg;
                msg << "duplicate edge (" << edges_[k].i << ", " << edges_[k].j << ")";
                throw usage_error(msg.str());
            }
        }
        detail::require(coords_.size() == 0 || static_cast<std::size_t>(coords_.rows()) == n_,
                        "coordinate rows must match the vertex count");
    }

    std::size_t size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Eigen::MatrixXd& coords() const noexcept { return coords_; }
    bool has_coords() const noexcept { return coords_.size() != 0; }

    double average_degree() const noexcept
    {
        return n_ == 0 ? 0.0 : 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(n_);
    }

    Eigen::MatrixXd adjacency() const
    {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_, n_);
        for (const auto& e : edges_) {
            w(e.i, e.j) = e.weight;
            w(e.j, e.i) = e.weight;
        }
        return w;
    }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    Eigen::MatrixXd coords_;
};

/// Combinatorial Laplacian L = diag(W 1) - W.
inline OperatorMatrix laplacian(const Graph& g)
{
    const Eigen::MatrixXd w = g.adjacency();
    OperatorMatrix l = -w;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double degree = 0.0;
        for (Eigen::Index c = 0; c < w.cols(); ++c) degree += w(r, c);
        l(r, r) = degree;
    }
    return l;
}

namespace detail {

inline double gaussian_weight(double distance, double sigma)
{
    if (sigma <= 0.0) return 1.0;
    return std::exp(-(distance * distance) / (sigma * sigma));
}

inline std::vector<Edge> weight_edges(std::vector<std::pair<std::size_t, std::size_t>> pairs,
                                      const Eigen::MatrixXd& coords, double sigma,
                                      WeightKernel kernel)
{
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (auto [i, j] : pairs) {
        const double d = (coords.row(i) - coords.row(j)).norm();
        const double w = kernel == WeightKernel::gaussian ? gaussian_weight(d, sigma) : 1.0;
        edges.push_back({i, j, w});
    }
    return edges;
}

} // namespace detail

/// Symmetrized k-nearest-neighbour graph over the rows of `coords`.
/// An edge is kept if either endpoint selects the other. Distance ties are
/// broken by the lower vertex index. Duplicate points are rejected.
inline Graph knn_graph(const Eigen::MatrixXd& coords, std::size_t k,
                       WeightKernel kernel = WeightKernel::gaussian)
{
    const auto n = static_cast<std::size_t>(coords.rows());
    detail::require(k >= 1, "k must be positive");
    detail::require(n >= k + 1, "insufficient points for a k-nearest-neighbour graph");
    detail::require(coords.allFinite(), "coordinates must be finite");

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double distance_sum = 0.0;
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = (coords.row(i) - coords.row(j)).norm();
            if (d == 0.0) {
                std::ostringstream msg;
                msg << "duplicate coordinates at vertices " << std::min(i, j) << " and "
                    << std::max(i, j);
                throw usage_error(msg.str());
            }
            candidates.emplace_back(d, j);
        }
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                          candidates.end());
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t j = candidates[r].second;
            distance_sum += candidates[r].first;
            pairs.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    const double sigma = distance_sum / static_cast<double>(n * k);
    return Graph(n, detail::weight_edges(std::move(pairs), coords, sigma, kernel), coords);
}

/// Random geometric graph: `n` points uniform on the unit square, connected
/// when closer than a radius found by bisection so that the realized average
/// degree lies within 0.5 of `target_avg_degree`.
inline Graph random_geometric_graph(std::size_t n, double target_avg_degree, std::uint64_t seed,
                                    WeightKernel kernel = WeightKernel::gaussian)
{
    detail::require(n >= 2, "a random geometric graph needs at least two vertices");
    detail::require(target_avg_degree > 0.0 && target_avg_degree < static_cast<double>(n),
                    "target average degree must lie in (0, n)");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::MatrixXd coords(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        coords(i, 0) = uniform(rng);
        coords(i, 1) = uniform(rng);
    }

    std::vector<double> distances;
    distances.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            distances.push_back((coords.row(i) - coords.row(j)).norm());

    auto degree_at = [&](double radius) {
        const auto count = std::count_if(distances.begin(), distances.end(),
                                         [radius](double d) { return d <= radius; });
        return 2.0 * static_cast<double>(count) / static_cast<double>(n);
    };

    double lo = 0.0;
    double hi = std::sqrt(2.0);
    double radius = 0.5 * (lo + hi);
    double degree = degree_at(radius);
    int iteration = 0;
    while (std::abs(degree - target_avg_degree) > 0.5) {
        if (++iteration > 64) {
            std::ostringstream msg;
            msg << "radius bisection did not reach average degree " << target_avg_degree
                << " (realized " << degree << ")";
            throw numerical_error(msg.str());
        }
        (degree < target_avg_degree ? lo : hi) = radius;
        radius = 0.5 * (lo + hi);
        degree = degree_at(radius);
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double length_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (coords.row(i) - coords.row(j)).norm();
            if (d <= radius) {
                pairs.emplace_back(i, j);
                length_sum += d;
            }
        }
    }
    const double sigma = pairs.empty() ? 0.0 : length_sum / static_cast<double>(pairs.size());
    return Graph(n, detail::weight_edges(std::move(pairs), coords, sigma, kernel), coords);
}

} // namespace tvarma
