#include <random>
#include <set>
#include <utility>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tvarma/graph.hpp"

using namespace tvarma;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edge_pairs(const Graph& g)
{
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& e : g.edges()) out.emplace(e.i, e.j);
    return out;
}

} // namespace

TEST(Laplacian, PathOnTwoNodes)
{
    const Graph g(2, {{0, 1, 1.0}});
    Eigen::Matrix2d expected;
    expected << 1, -1, -1, 1;
    EXPECT_EQ(laplacian(g), expected);
}

TEST(Laplacian, EmptyGraphIsZero)
{
    const Graph g(3, {});
    EXPECT_EQ(laplacian(g), Eigen::MatrixXd::Zero(3, 3));
}

TEST(Laplacian, TriangleWithWeightTwo)
{
    const Graph g(3, {{0, 1, 2.0}, {1, 2, 2.0}, {0, 2, 2.0}});
    const Eigen::MatrixXd l = laplacian(g);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(l(i, j), i == j ? 4.0 : -2.0);
}

TEST(Laplacian, NullSpaceAndPsdOnRandomGraphs)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Graph g = random_geometric_graph(30, 4.0, seed);
        const Eigen::MatrixXd l = laplacian(g);
        EXPECT_LE((l * Eigen::VectorXd::Ones(30)).cwiseAbs().maxCoeff(), 1e-12);
        const double norm = l.norm();
        for (int trial = 0; trial < 1000; ++trial) {
            Eigen::VectorXd x(30);
            for (auto& v : x) v = normal(rng);
            EXPECT_GE(x.dot(l * x), -1e-9 * norm * x.squaredNorm());
        }
    }
}

TEST(GraphType, RejectsInvalidEdges)
{
    EXPECT_THROW(Graph(2, {{0, 0, 1.0}}), usage_error);
    EXPECT_THROW(Graph(2, {{0, 2, 1.0}}), usage_error);
    EXPECT_THROW(Graph(2, {{0, 1, -1.0}}), usage_error);
    EXPECT_THROW(Graph(3, {{0, 1, 1.0}, {1, 0, 1.0}}), usage_error);
}

TEST(KnnGraph, CollinearPoints)
{
    Eigen::MatrixXd coords(4, 1);
    coords << 0, 1, 2, 3;
    const Graph g = knn_graph(coords, 1);
    EXPECT_EQ(edge_pairs(g), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {2, 3}}));
    EXPECT_EQ(edge_pairs(g), oracle::knn_edges(coords, 1));
}

TEST(KnnGraph, TwoPoints)
{
    Eigen::MatrixXd coords(2, 2);
    coords << 0, 0, 3, 4;
    const Graph g = knn_graph(coords, 1);
    ASSERT_EQ(g.edges().size(), 1u);
    EXPECT_EQ(g.edges()[0].i, 0u);
    EXPECT_EQ(g.edges()[0].j, 1u);
}

TEST(KnnGraph, UnitSquareIsFourCycle)
{
    Eigen::MatrixXd coords(4, 2);
    coords << 0, 0, 1, 0, 1, 1, 0, 1;
    const Graph g = knn_graph(coords, 2);
    EXPECT_EQ(edge_pairs(g), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {2, 3}, {0, 3}}));
}

TEST(KnnGraph, MatchesBruteForceAndIsSymmetric)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t k = 1; k <= 4; ++k) {
        Eigen::MatrixXd coords(25, 2);
        for (Eigen::Index r = 0; r < coords.rows(); ++r) coords.row(r) << uniform(rng), uniform(rng);
        const Graph g = knn_graph(coords, k);
        EXPECT_EQ(edge_pairs(g), oracle::knn_edges(coords, k));
        const Eigen::MatrixXd w = g.adjacency();
        EXPECT_EQ(w, w.transpose());
        for (const auto& e : g.edges()) {
            EXPECT_GT(e.weight, 0.0);
            EXPECT_LE(e.weight, 1.0);
        }
    }
}

TEST(KnnGraph, UnitKernel)
{
    Eigen::MatrixXd coords(3, 1);
    coords << 0, 1, 5;
    const Graph g = knn_graph(coords, 1, WeightKernel::unit);
    for (const auto& e : g.edges()) EXPECT_EQ(e.weight, 1.0);
}

TEST(KnnGraph, Errors)
{
    Eigen::MatrixXd two(2, 1);
    two << 0, 1;
    EXPECT_THROW(knn_graph(two, 2), usage_error);
    Eigen::MatrixXd dup(3, 1);
    dup << 0, 1, 1;
    EXPECT_THROW(knn_graph(dup, 1), usage_error);
}

TEST(RandomGeometricGraph, PaperScaleDegree)
{
    const Graph g = random_geometric_graph(50, 5.0, 1);
    EXPECT_EQ(g.size(), 50u);
    EXPECT_GE(g.average_degree(), 4.5);
    EXPECT_LE(g.average_degree(), 5.5);
    EXPECT_TRUE(g.has_coords());
}

TEST(RandomGeometricGraph, TwoNodesSingleEdge)
{
    const Graph g = random_geometric_graph(2, 1.0, 7);
    EXPECT_EQ(g.edges().size(), 1u);
}

TEST(RandomGeometricGraph, DeterministicGivenSeed)
{
    const Graph a = random_geometric_graph(40, 6.0, 99);
    const Graph b = random_geometric_graph(40, 6.0, 99);
    ASSERT_EQ(a.edges().size(), b.edges().size());
    for (std::size_t k = 0; k < a.edges().size(); ++k) {
        EXPECT_EQ(a.edges()[k].i, b.edges()[k].i);
        EXPECT_EQ(a.edges()[k].j, b.edges()[k].j);
        EXPECT_EQ(a.edges()[k].weight, b.edges()[k].weight);
    }
    EXPECT_EQ(a.coords(), b.coords());
}

TEST(RandomGeometricGraph, RejectsBadArguments)
{
    EXPECT_THROW(random_geometric_graph(1, 0.5, 1), usage_error);
    EXPECT_THROW(random_geometric_graph(10, 10.0, 1), usage_error);
    EXPECT_THROW(random_geometric_graph(10, 0.0, 1), usage_error);
}
