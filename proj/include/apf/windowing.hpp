#pragma once

#include <string>
#include <vector>

#include "apf/core.hpp"
#include "apf/ingest.hpp"

namespace apf {

enum class Split { Train, Val, Test };

/// Min-max normaliser fitted on the training part of one series.
/// A constant range normalises everything to 0.
struct MinMax {
    double min = 0.0;
    double max = 0.0;

    double normalize(double x) const { return max > min ? (x - min) / (max - min) : 0.0; }
    double denormalize(double y) const { return max > min ? y * (max - min) + min : min; }
};

struct WindowOptions {
    int lookback = 36;
    int horizon = 1;
    int stride = 1;
    double train_fraction = 0.7;
    double val_fraction = 0.1;  // the remainder is the test split
    int input_channels = 1;     // 1: load only, 2: load and active users

    void validate() const;
};

/// Sliding (input, target) windows over a set of series.
///
/// Windows of each series are split chronologically (train, then val, then
/// test) by count; normalisers use only the values covered by train windows.
struct WindowedDataset {
    int lookback = 0;
    int horizon = 0;
    int input_channels = 1;
    Matrix inputs;   // m x (lookback * channels), step-major, normalised
    Matrix targets;  // m x horizon, normalised load
    std::vector<std::size_t> series;  // source series index per window
    std::vector<std::size_t> start;   // index of the first input step
    std::vector<Split> split;
    std::vector<std::string> series_ids;  // per source series
    std::vector<MinMax> load_norm;        // per source series
    std::vector<MinMax> users_norm;       // per source series
    std::vector<std::string> warnings;

    std::size_t size() const { return split.size(); }
    std::vector<std::size_t> rows(Split which) const;
};

/// Number of windows a series of length n yields: floor((n - P - h) / stride) + 1, or 0.
std::size_t window_count(std::size_t n, const WindowOptions& options);

/// Series shorter than lookback + horizon are skipped with a warning.
WindowedDataset window_series(const std::vector<LoadSeries>& series, const WindowOptions& options);

}  // namespace apf
