#include "apf/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace apf {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

int label_count(std::span<const int> assignments) {
    int k = 0;
    for (int a : assignments) {
        if (a < 0) throw InvalidInput("negative cluster label");
        k = std::max(k, a + 1);
    }
    return k;
}

Matrix cluster_means(const Matrix& points, std::span<const int> assignments, int k, std::vector<std::size_t>& sizes) {
    Matrix c(static_cast<std::size_t>(k), points.cols());
    sizes.assign(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto a = static_cast<std::size_t>(assignments[i]);
        ++sizes[a];
        for (std::size_t d = 0; d < points.cols(); ++d) c(a, d) += points(i, d);
    }
    for (std::size_t a = 0; a < c.rows(); ++a)
        if (sizes[a] > 0)
            for (std::size_t d = 0; d < points.cols(); ++d) c(a, d) /= static_cast<double>(sizes[a]);
    return c;
}

Matrix plus_plus_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
    const std::size_t n = points.rows();
    Matrix centers(static_cast<std::size_t>(k), points.cols());
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::size_t first = pick(rng);
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points.row(i), centers.row(0));

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double x : d2) total += x;
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points.row(i), centers.row(c)));
    }
    return centers;
}

struct Run {
    std::vector<int> assignments;
    double wcss = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

Run lloyd(const Matrix& points, int k, std::uint64_t seed, int max_iter, double tol) {
    const std::size_t n = points.rows();
    std::mt19937_64 rng(seed);
    Matrix centers = plus_plus_seeds(points, k, rng);
    Run run;
    run.assignments.assign(n, 0);
    std::vector<double> dist(n);
    std::vector<std::size_t> sizes;

    for (int it = 0; it < max_iter; ++it) {
        sizes.assign(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points.row(i), centers.row(0));
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(points.row(i), centers.row(static_cast<std::size_t>(c)));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            run.assignments[i] = best;
            dist[i] = best_d;
            ++sizes[static_cast<std::size_t>(best)];
        }
        // Empty cluster: take over the point farthest from its centroid.
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[static_cast<std::size_t>(run.assignments[i])] < 2) continue;
                if (far == n || dist[i] > dist[far]) far = i;
            }
            if (far == n) throw InvalidInput("kmeans: cannot fill an empty cluster (k > n?)");
            --sizes[static_cast<std::size_t>(run.assignments[far])];
            run.assignments[far] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
            dist[far] = 0.0;
            std::copy(points.row(far).begin(), points.row(far).end(), centers.row(static_cast<std::size_t>(c)).begin());
        }
        centers = cluster_means(points, run.assignments, k, sizes);
        const double current = wcss(points, run.assignments);
        run.trace.push_back(current);
        run.iterations = it + 1;
        if (run.trace.size() >= 2) {
            const double prev = run.trace[run.trace.size() - 2];
            if (prev - current <= tol * prev) break;
        }
        if (current == 0.0) break;
    }
    run.wcss = run.trace.back();
    return run;
}

std::vector<int> canonical_labels(std::span<const int> labels) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

}  // namespace

double wcss(const Matrix& points, std::span<const int> assignments) {
    if (assignments.size() != points.rows()) throw InvalidInput("assignment count does not match point count");
    const int k = label_count(assignments);
    std::vector<std::size_t> sizes;
    const Matrix c = cluster_means(points, assignments, k, sizes);
    std::vector<double> d(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i)
        d[i] = sq_dist(points.row(i), c.row(static_cast<std::size_t>(assignments[i])));
    return stats::sum(d);
}

double silhouette(const Matrix& points, std::span<const int> assignments) {
    const std::size_t n = points.rows();
    if (assignments.size() != n) throw InvalidInput("assignment count does not match point count");
    const int k = label_count(assignments);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
    const auto used = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
    if (used < 2) throw InvalidInput("silhouette needs at least 2 clusters");

    std::vector<double> s(n, 0.0);
    std::vector<double> dist_sum(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(assignments[i]);
        if (sizes[own] == 1) continue;
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[static_cast<std::size_t>(assignments[j])] += std::sqrt(sq_dist(points.row(i), points.row(j)));
        }
        const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < dist_sum.size(); ++c)
            if (c != own && sizes[c] > 0) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
        const double m = std::max(a, b);
        s[i] = m > 0.0 ? (b - a) / m : 0.0;
    }
    return stats::mean(s);
}

double calinski_harabasz(const Matrix& points, std::span<const int> assignments) {
    const std::size_t n = points.rows();
    if (assignments.size() != n) throw InvalidInput("assignment count does not match point count");
    const int k = label_count(assignments);
    if (k < 2 || static_cast<std::size_t>(k) > n - 1)
        throw InvalidInput("Calinski-Harabasz needs 2 <= k <= n - 1");
    std::vector<std::size_t> sizes;
    const Matrix c = cluster_means(points, assignments, k, sizes);
    std::vector<double> overall(points.cols(), 0.0);
    for (std::size_t d = 0; d < points.cols(); ++d) overall[d] = stats::mean(points.column(d));
    double bss = 0.0;
    for (std::size_t a = 0; a < c.rows(); ++a)
        bss += static_cast<double>(sizes[a]) * sq_dist(c.row(a), overall);
    const double wss = wcss(points, assignments);
    if (wss == 0.0) return std::numeric_limits<double>::infinity();
    return (bss / static_cast<double>(k - 1)) / (wss / static_cast<double>(n - static_cast<std::size_t>(k)));
}

ClusteringResult kmeans(const Matrix& points, const KMeansOptions& options) {
    const std::size_t n = points.rows();
    if (options.k < 1 || static_cast<std::size_t>(options.k) > n) throw InvalidInput("kmeans requires 1 <= k <= n");
    if (options.restarts < 1 || options.max_iter < 1 || options.tol < 0.0)
        throw InvalidInput("kmeans requires restarts >= 1, max_iter >= 1, tol >= 0");
    for (double x : points.data())
        if (!std::isfinite(x)) throw InvalidInput("kmeans input contains non-finite values");

    Run best;
    int best_restart = -1;
    for (int r = 0; r < options.restarts; ++r) {
        Run run = lloyd(points, options.k,
                        derive_seed(options.seed, static_cast<std::uint64_t>(options.k), static_cast<std::uint64_t>(r)),
                        options.max_iter, options.tol);
        if (best_restart < 0 || run.wcss < best.wcss) {
            best = std::move(run);
            best_restart = r;
        }
    }

    ClusteringResult result;
    result.k = options.k;
    result.seed = options.seed;
    result.best_restart = best_restart;
    result.iterations = best.iterations;
    result.wcss_trace = std::move(best.trace);
    result.assignments = canonical_labels(best.assignments);
    std::vector<std::size_t> sizes;
    result.centroids = cluster_means(points, result.assignments, options.k, sizes);
    result.wcss = wcss(points, result.assignments);
    if (options.k >= 2) result.silhouette = silhouette(points, result.assignments);
    if (options.k >= 2 && static_cast<std::size_t>(options.k) <= n - 1)
        result.calinski_harabasz = calinski_harabasz(points, result.assignments);
    return result;
}

KSelection select_k(const Matrix& points, int k_min, int k_max, const KMeansOptions& base) {
    const std::size_t n = points.rows();
    if (k_min < 2 || k_min > k_max || static_cast<std::size_t>(k_max) > n - 1)
        throw InvalidInput("select_k requires 2 <= k_min <= k_max <= n - 1");
    KSelection sel;
    bool have = false;
    for (int k = k_min; k <= k_max; ++k) {
        KMeansOptions opt = base;
        opt.k = k;
        ClusteringResult r = kmeans(points, opt);
        sel.table.push_back({k, r.wcss, *r.silhouette, r.calinski_harabasz});
        if (!have || *r.silhouette > *sel.best.silhouette + 1e-9) {
            sel.best = std::move(r);
            have = true;
        }
    }
    return sel;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw InvalidInput("labelings differ in length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ra, rb;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ra[a[i]] += 1.0;
        rb[b[i]] += 1.0;
    }
    auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& [key, v] : joint) index += c2(v);
    for (const auto& [key, v] : ra) sa += c2(v);
    for (const auto& [key, v] : rb) sb += c2(v);
    const double expected = sa * sb / c2(static_cast<double>(n));
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

}  // namespace apf
