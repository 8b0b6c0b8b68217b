#pragma once

#include <array>
#include <bitset>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apf/core.hpp"
#include "apf/ingest.hpp"

namespace apf {

enum class Transform { CubeRoot, Log1p };

Transform parse_transform(std::string_view name);
std::string_view to_string(Transform t);

enum class Period { Morning = 0, Afternoon = 1, Night = 2 };
enum class DayType { Weekday = 0, Weekend = 1 };

/// Time-of-day and day-type partition used for temporal features.
/// Morning [morning_start, afternoon_start), Afternoon [afternoon_start,
/// night_start), Night the remainder of the day. Saturday and Sunday are weekend.
struct CalendarConfig {
    int morning_start = 6;
    int afternoon_start = 12;
    int night_start = 18;
    int tz_offset_hours = 0;

    void validate() const;
    Period period_of(Timestamp t) const;
    DayType day_type_of(Timestamp t) const;
    int local_hour(Timestamp t) const;
};

inline constexpr std::size_t kFeatureCount = 35;
inline constexpr std::size_t kStrata = 6;  // 3 periods x 2 day types

/// Column names in output order.
const std::array<std::string, kFeatureCount>& feature_names();

struct FeatureVector {
    std::string ap_id;
    std::array<double, kFeatureCount> values{};
    /// Bit (period * 2 + day_type) set when that stratum had at least one window.
    std::bitset<kStrata> coverage;
};

struct ByteTertiles {
    double low = 0.0;
    double high = 0.0;
};

LoadSeries transform_load(const LoadSeries& series, Transform method);

/// Thresholds at the 1/3 and 2/3 empirical quantiles of the pooled sample.
ByteTertiles compute_tertiles(std::span<const double> pooled);
ByteTertiles compute_tertiles(const std::vector<LoadSeries>& transformed);

/// Extract the fixed 35-feature descriptor of one (transformed) series.
///
/// Order: bytes mean/std/p90, users mean/std, then for bytes and users, each
/// of morning/afternoon/night and weekday/weekend a mean and std, then
/// peak_hour (/23), peak_to_mean, night_load_ratio, weekend_to_weekday_ratio,
/// zero_window_fraction, low_byte_fraction.
FeatureVector extract_features(const LoadSeries& series, const CalendarConfig& calendar,
                               const ByteTertiles& tertiles);

/// Raw byte totals by stratum, used for bookkeeping checks.
struct StratumTotals {
    double total = 0.0;
    double weekday = 0.0;
    double weekend = 0.0;
    std::array<double, 3> by_period{};
};
StratumTotals stratum_totals(const LoadSeries& series, const CalendarConfig& calendar);

/// Column-wise z-score with population std. Degenerate (constant) columns
/// scale to 0 and are flagged.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<bool> degenerate;

    Matrix apply(const Matrix& raw) const;
    Matrix inverse(const Matrix& scaled) const;
};

struct ScaledFeatures {
    Matrix scaled;
    Scaler scaler;
};

ScaledFeatures scale_features(const Matrix& raw);
ScaledFeatures scale_features(const std::vector<FeatureVector>& rows);

Matrix to_matrix(const std::vector<FeatureVector>& rows);

}  // namespace apf
