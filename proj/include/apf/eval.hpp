#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apf/lstm.hpp"
#include "apf/windowing.hpp"

namespace apf {

/// Mean absolute deviation over a horizon vector.
double mae(std::span<const double> target, std::span<const double> prediction);

/// Per-window errors of one cluster.
struct ClusterErrors {
    int cluster = 0;
    std::vector<double> window_errors;
};

struct AggregateError {
    double overall = 0.0;                   // mean over every window of every cluster
    std::map<int, double> per_cluster;      // mean within each cluster
    std::map<int, std::size_t> window_counts;
};

/// Throws InvalidInput when no window errors are supplied.
AggregateError aggregate_error(const std::vector<ClusterErrors>& groups);

/// 99th percentile (linear interpolation) of |target - prediction| in MB
/// (2^20 bytes). Each row is denormalised with its own normaliser; horizon
/// steps are pooled.
double p99_abs_error(const Matrix& targets, const Matrix& predictions, std::span<const MinMax> row_denormalizers);

/// Relative MAE reduction (base - new) / base. Throws InvalidInput when base <= 0.
double improvement(double base_mae, double new_mae);

/// Storage assumed for each tier when planning, in bytes.
struct NominalSizes {
    double gm = 1.0 * kBytesPerMB;
    double lk = 1.0 * kBytesPerMB;
    double lkv2 = 3.5 * kBytesPerMB;

    double of(Tier tier) const;
};

struct PerformanceRow {
    int cluster = 0;
    Tier tier = Tier::GM;
    int horizon_minutes = 10;
    double mae = 0.0;              // mean of per-window MAE, normalised units
    double mae_series_mean = 0.0;  // mean over APs of each AP's window-mean MAE
    double p99_abs_error_mb = 0.0;
    double storage_bytes = 0.0;    // nominal
    std::size_t n_series = 0;
    std::size_t n_windows = 0;
    std::size_t param_count = 0;
    std::uint64_t model_seed = 0;
};

struct PerformanceTable {
    std::vector<PerformanceRow> rows;
    std::map<std::string, std::string> provenance;

    const PerformanceRow* find(int cluster, Tier tier, int horizon_minutes) const;
    /// Adds a row; throws InvalidInput on a duplicate (cluster, tier, horizon).
    void add(PerformanceRow row);
    std::vector<int> clusters() const;
    std::vector<int> horizons() const;
};

/// Models available for one horizon: the shared GM plus optional
/// cluster-specific models keyed by cluster.
struct ModelSet {
    const ForecastModel* gm = nullptr;
    std::map<int, const ForecastModel*> lk;
    std::map<int, const ForecastModel*> lkv2;
};

struct EvaluationSet {
    int horizon_minutes = 10;
    const WindowedDataset* data = nullptr;  // all series, windowed for this horizon
    std::vector<int> series_cluster;        // cluster per source series of `data`
    ModelSet models;
};

/// Runs every available model on the test windows of each cluster.
/// Throws InvalidInput when a horizon has no GM.
PerformanceTable build_performance_table(const std::vector<EvaluationSet>& sets, const NominalSizes& sizes);

}  // namespace apf
