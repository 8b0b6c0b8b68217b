#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "apf/cluster.hpp"

using namespace apf;

namespace {

Matrix column(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

// Blobs around well separated centres, labels returned through `truth`.
Matrix blobs(std::mt19937_64& rng, int k, int per, std::size_t dims, double spread, std::vector<int>& truth) {
    std::normal_distribution<double> g(0.0, spread);
    Matrix m(static_cast<std::size_t>(k * per), dims);
    truth.clear();
    for (int c = 0; c < k; ++c)
        for (int p = 0; p < per; ++p) {
            const std::size_t r = static_cast<std::size_t>(c * per + p);
            for (std::size_t d = 0; d < dims; ++d) m(r, d) = (d == static_cast<std::size_t>(c) % dims ? 10.0 * (c + 1) : 0.0) + g(rng);
            truth.push_back(c);
        }
    return m;
}

// Exhaustive minimum WCSS over all assignments with k non-empty clusters.
double exhaustive_min_wcss(const Matrix& points, int k) {
    const std::size_t n = points.rows();
    std::vector<int> a(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<int> used(static_cast<std::size_t>(k), 0);
        for (int x : a) used[static_cast<std::size_t>(x)] = 1;
        if (std::accumulate(used.begin(), used.end(), 0) == k) best = std::min(best, wcss(points, a));
        std::size_t i = 0;
        while (i < n && ++a[i] == k) a[i++] = 0;
        if (i == n) break;
    }
    return best;
}

}  // namespace

TEST(ClusterMetrics, HandComputedOneDimensionalExample) {
    const Matrix pts = column({0.0, 0.1, 10.0, 10.1});
    const std::vector<int> labels{0, 0, 1, 1};
    EXPECT_NEAR(wcss(pts, labels), 0.01, 1e-12);
    const double s = (2.0 - 0.1 / 10.05 - 0.1 / 9.95) / 2.0;
    EXPECT_NEAR(silhouette(pts, labels), s, 1e-12);
    EXPECT_NEAR(silhouette(pts, labels), 0.990, 1e-3);
    EXPECT_NEAR(calinski_harabasz(pts, labels), 20000.0, 1e-6);

    const ClusteringResult r = kmeans(pts, {.k = 2, .seed = 5});
    EXPECT_EQ(r.assignments, labels);
    EXPECT_NEAR(r.wcss, 0.01, 1e-12);
    EXPECT_NEAR(r.centroids(0, 0), 0.05, 1e-12);
    EXPECT_NEAR(r.centroids(1, 0), 10.05, 1e-12);
}

TEST(ClusterMetrics, EdgeCasesForKOneAndKEqualsN) {
    const Matrix pts = column({1.0, 2.0, 6.0});
    const ClusteringResult one = kmeans(pts, {.k = 1, .seed = 1});
    EXPECT_NEAR(one.wcss, 14.0, 1e-12);  // mean 3: 4 + 1 + 9
    EXPECT_FALSE(one.silhouette.has_value());
    EXPECT_FALSE(one.calinski_harabasz.has_value());
    const ClusteringResult all = kmeans(pts, {.k = 3, .seed = 1});
    EXPECT_EQ(all.wcss, 0.0);
    EXPECT_EQ(all.assignments, (std::vector<int>{0, 1, 2}));
    EXPECT_FALSE(all.calinski_harabasz.has_value());
    EXPECT_EQ(*all.silhouette, 0.0);  // singletons contribute 0
    EXPECT_THROW(kmeans(pts, {.k = 4}), InvalidInput);
    EXPECT_THROW(kmeans(pts, {.k = 0}), InvalidInput);
}

TEST(KMeans, MatchesExhaustiveOptimumOnSmallInstances) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial % 5);
        const std::size_t d = 1 + static_cast<std::size_t>(trial % 3);
        Matrix pts(n, d);
        for (auto& v : pts.data()) v = u(rng);
        const ClusteringResult r = kmeans(pts, {.k = 2, .seed = static_cast<std::uint64_t>(trial), .restarts = 32});
        EXPECT_NEAR(r.wcss, exhaustive_min_wcss(pts, 2), 1e-9) << "trial " << trial;
    }
}

TEST(KMeans, LloydTraceIsNonIncreasingAndLabelsCanonical) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix pts(40, 3);
        for (auto& v : pts.data()) v = u(rng);
        const ClusteringResult r = kmeans(pts, {.k = 4, .seed = static_cast<std::uint64_t>(trial), .restarts = 3});
        for (std::size_t i = 1; i < r.wcss_trace.size(); ++i) EXPECT_LE(r.wcss_trace[i], r.wcss_trace[i - 1] + 1e-12);
        int next = 0;
        for (int a : r.assignments) {
            EXPECT_LE(a, next);
            if (a == next) ++next;
        }
        EXPECT_EQ(next, 4);
    }
}

TEST(KMeans, DeterministicForASeedAndPermutationInvariantOnBlobs) {
    std::mt19937_64 rng(12);
    std::vector<int> truth;
    const Matrix pts = blobs(rng, 3, 15, 3, 0.5, truth);
    const ClusteringResult a = kmeans(pts, {.k = 3, .seed = 99});
    const ClusteringResult b = kmeans(pts, {.k = 3, .seed = 99});
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.centroids, b.centroids);

    std::vector<std::size_t> perm(pts.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(pts.rows(), pts.cols());
    std::vector<int> truth_shuffled;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t d = 0; d < pts.cols(); ++d) shuffled(i, d) = pts(perm[i], d);
        truth_shuffled.push_back(truth[perm[i]]);
    }
    const ClusteringResult c = kmeans(shuffled, {.k = 3, .seed = 99});
    EXPECT_NEAR(c.wcss, a.wcss, 1e-9);
    EXPECT_EQ(adjusted_rand_index(c.assignments, truth_shuffled), 1.0);
    EXPECT_EQ(adjusted_rand_index(a.assignments, truth), 1.0);
}

TEST(SelectK, FindsThreeBlobsAndReportsEveryK) {
    std::mt19937_64 rng(31);
    std::vector<int> truth;
    const Matrix pts = blobs(rng, 3, 20, 3, 0.4, truth);
    const KSelection sel = select_k(pts, 2, 6, {.seed = 4});
    EXPECT_EQ(sel.best.k, 3);
    ASSERT_EQ(sel.table.size(), 5u);
    for (std::size_t i = 0; i < sel.table.size(); ++i) EXPECT_EQ(sel.table[i].k, static_cast<int>(i) + 2);
    EXPECT_EQ(adjusted_rand_index(sel.best.assignments, truth), 1.0);
    EXPECT_THROW(select_k(pts, 1, 4, {}), InvalidInput);
    EXPECT_THROW(select_k(pts, 4, 3, {}), InvalidInput);
    EXPECT_THROW(select_k(pts, 2, 60, {}), InvalidInput);
}

TEST(SelectK, TiesGoToSmallerK) {
    // k = 2 scores the maximum silhouette of 1, so no larger k may displace it.
    const Matrix pts = column({0.0, 0.0, 0.0, 5.0, 5.0, 5.0});
    const KSelection sel = select_k(pts, 2, 5, {.seed = 2});
    EXPECT_EQ(sel.best.k, 2);
    EXPECT_EQ(*sel.best.silhouette, 1.0);
}

TEST(Ari, KnownValues) {
    const std::vector<int> a{0, 0, 1, 1}, b{1, 1, 0, 0}, c{0, 1, 0, 1};
    EXPECT_EQ(adjusted_rand_index(a, b), 1.0);
    EXPECT_NEAR(adjusted_rand_index(a, c), -0.5, 1e-12);
    EXPECT_THROW(adjusted_rand_index(a, std::vector<int>{0}), InvalidInput);
}
