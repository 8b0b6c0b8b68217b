#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apf/ingest.hpp"
#include "apf/lstm.hpp"
#include "apf/windowing.hpp"

namespace apf {

/// Adam on mean squared error with early stopping on validation MAE.
struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 20;
    int patience = 3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;          // 0 is the untrained model
    double train_loss = 0;  // mean squared error over the epoch's training windows
    double val_mae = 0;     // normalised MAE on the validation split
};

struct TrainResult {
    ForecastModel model;  // best-validation checkpoint
    std::vector<EpochRecord> history;
    int best_epoch = 0;
};

/// Predictions (normalised) for the given dataset rows.
Matrix predict(const ForecastModel& model, const WindowedDataset& data, std::span<const std::size_t> rows);

/// Mean over windows of the per-window MAE, on normalised values.
double mean_window_mae(const ForecastModel& model, const WindowedDataset& data, std::span<const std::size_t> rows);

/// Trains a copy of `model`. Batch order is drawn from config.seed, so the
/// result is deterministic. Throws DivergenceError on a non-finite loss.
/// Validation uses the Val split, or the Train split when Val is empty.
TrainResult train(ForecastModel model, const WindowedDataset& data, const TrainConfig& config);

/// Single model over the windows of every series.
TrainResult train_global(const std::vector<LoadSeries>& series, const ModelSpec& spec, const WindowOptions& windows,
                         const TrainConfig& config);

/// Model trained only on the series assigned to `cluster`.
TrainResult train_cluster(const std::vector<LoadSeries>& series, std::span<const int> assignments, int cluster,
                          const ModelSpec& spec, const WindowOptions& windows, const TrainConfig& config);

/// Members of one cluster, in input order. Throws InvalidInput when empty.
std::vector<LoadSeries> cluster_members(const std::vector<LoadSeries>& series, std::span<const int> assignments,
                                        int cluster);

}  // namespace apf
