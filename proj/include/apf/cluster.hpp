#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apf/core.hpp"

namespace apf {

struct KMeansOptions {
    int k = 2;
    std::uint64_t seed = 0;
    int restarts = 10;
    int max_iter = 300;
    double tol = 1e-6;
};

struct ClusteringResult {
    int k = 0;
    std::vector<int> assignments;  // per point, in [0, k)
    Matrix centroids;              // k x r
    double wcss = 0.0;
    // Undefined for k = 1 (both) and k = n (Calinski-Harabasz).
    std::optional<double> silhouette;
    std::optional<double> calinski_harabasz;
    int iterations = 0;
    std::uint64_t seed = 0;
    int best_restart = 0;
    /// WCSS after each Lloyd iteration of the winning restart.
    std::vector<double> wcss_trace;
};

/// k-means++ seeding, Lloyd iterations, best of `restarts` by WCSS.
/// Labels are canonical: clusters are numbered by first appearance in point order.
ClusteringResult kmeans(const Matrix& points, const KMeansOptions& options);

/// Sum of squared distances to the per-cluster means implied by `assignments`.
double wcss(const Matrix& points, std::span<const int> assignments);

/// Mean silhouette over points; points in singleton clusters contribute 0.
double silhouette(const Matrix& points, std::span<const int> assignments);

/// (BSS / (k - 1)) / (WSS / (n - k)). Infinite when WSS is 0.
double calinski_harabasz(const Matrix& points, std::span<const int> assignments);

struct KScore {
    int k = 0;
    double wcss = 0.0;
    double silhouette = 0.0;
    std::optional<double> calinski_harabasz;
};

struct KSelection {
    ClusteringResult best;
    std::vector<KScore> table;  // one row per k in the range
};

/// Runs kmeans for each k in [k_min, k_max] and keeps the silhouette maximiser
/// (ties within 1e-9 go to the smaller k). `base.k` is ignored.
KSelection select_k(const Matrix& points, int k_min, int k_max, const KMeansOptions& base);

/// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace apf
