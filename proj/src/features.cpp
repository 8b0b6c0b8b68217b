#include "apf/features.hpp"

#include <algorithm>
#include <cmath>

namespace apf {

Transform parse_transform(std::string_view name) {
    if (name == "cube_root" || name == "cbrt") return Transform::CubeRoot;
    if (name == "log1p" || name == "log") return Transform::Log1p;
    throw ConfigError("unknown transform '" + std::string(name) + "' (expected cube_root or log1p)");
}

std::string_view to_string(Transform t) { return t == Transform::CubeRoot ? "cube_root" : "log1p"; }

void CalendarConfig::validate() const {
    if (!(0 <= morning_start && morning_start < afternoon_start && afternoon_start < night_start &&
          night_start <= 24))
        throw ConfigError("calendar periods must satisfy 0 <= morning < afternoon < night <= 24");
    if (tz_offset_hours < -12 || tz_offset_hours > 14) throw ConfigError("timezone offset out of range");
}

int CalendarConfig::local_hour(Timestamp t) const {
    const Timestamp local = t + static_cast<Timestamp>(tz_offset_hours) * 3600;
    return static_cast<int>(((local % 86400) + 86400) % 86400 / 3600);
}

Period CalendarConfig::period_of(Timestamp t) const {
    const int h = local_hour(t);
    if (h >= morning_start && h < afternoon_start) return Period::Morning;
    if (h >= afternoon_start && h < night_start) return Period::Afternoon;
    return Period::Night;
}

DayType CalendarConfig::day_type_of(Timestamp t) const {
    const Timestamp local = t + static_cast<Timestamp>(tz_offset_hours) * 3600;
    Timestamp days = local / 86400;
    if (local % 86400 != 0 && local < 0) --days;
    const Timestamp dow = ((days % 7) + 7 + 3) % 7;  // 0 = Monday
    return dow >= 5 ? DayType::Weekend : DayType::Weekday;
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = [] {
        std::array<std::string, kFeatureCount> n;
        std::size_t i = 0;
        n[i++] = "bytes_mean";
        n[i++] = "bytes_std";
        n[i++] = "bytes_p90";
        n[i++] = "users_mean";
        n[i++] = "users_std";
        for (const char* metric : {"bytes", "users"})
            for (const char* period : {"morning", "afternoon", "night"})
                for (const char* day : {"weekday", "weekend"})
                    for (const char* stat : {"mean", "std"})
                        n[i++] = std::string(metric) + "_" + period + "_" + day + "_" + stat;
        n[i++] = "peak_hour";
        n[i++] = "peak_to_mean";
        n[i++] = "night_load_ratio";
        n[i++] = "weekend_to_weekday_ratio";
        n[i++] = "zero_window_fraction";
        n[i++] = "low_byte_fraction";
        return n;
    }();
    return names;
}

LoadSeries transform_load(const LoadSeries& series, Transform method) {
    LoadSeries out = series;
    auto apply = [method](std::vector<double>& v) {
        for (double& x : v) {
            if (x < 0.0) throw InvalidInput("negative load cannot be transformed");
            x = method == Transform::CubeRoot ? std::cbrt(x) : std::log1p(x);
        }
    };
    apply(out.load);
    apply(out.uplink);
    apply(out.downlink);
    return out;
}

ByteTertiles compute_tertiles(std::span<const double> pooled) {
    if (pooled.empty()) throw InvalidInput("cannot compute tertiles of an empty pool");
    return {stats::quantile(pooled, 1.0 / 3.0), stats::quantile(pooled, 2.0 / 3.0)};
}

ByteTertiles compute_tertiles(const std::vector<LoadSeries>& transformed) {
    std::vector<double> pooled;
    for (const auto& s : transformed) pooled.insert(pooled.end(), s.load.begin(), s.load.end());
    return compute_tertiles(pooled);
}

FeatureVector extract_features(const LoadSeries& series, const CalendarConfig& calendar,
                               const ByteTertiles& tertiles) {
    calendar.validate();
    const std::size_t n = series.size();
    if (n == 0) throw InvalidInput("cannot extract features from an empty series");
    if (series.active_users.size() != n) throw InvalidInput("load and active_users lengths differ");

    FeatureVector fv;
    fv.ap_id = series.ap_id;
    auto& v = fv.values;
    std::size_t k = 0;

    v[k++] = stats::mean(series.load);
    v[k++] = stats::stddev(series.load);
    v[k++] = stats::quantile(series.load, 0.9);
    v[k++] = stats::mean(series.active_users);
    v[k++] = stats::stddev(series.active_users);

    std::array<std::vector<double>, kStrata> bytes_by;
    std::array<std::vector<double>, kStrata> users_by;
    std::array<std::vector<double>, 24> hourly;
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp t = series.window_start(i);
        const auto stratum = static_cast<std::size_t>(calendar.period_of(t)) * 2 +
                             static_cast<std::size_t>(calendar.day_type_of(t));
        bytes_by[stratum].push_back(series.load[i]);
        users_by[stratum].push_back(series.active_users[i]);
        hourly[static_cast<std::size_t>(calendar.local_hour(t))].push_back(series.load[i]);
    }
    for (std::size_t s = 0; s < kStrata; ++s) fv.coverage[s] = !bytes_by[s].empty();
    for (const auto* by : {&bytes_by, &users_by}) {
        for (std::size_t s = 0; s < kStrata; ++s) {
            v[k++] = stats::mean((*by)[s]);
            v[k++] = stats::stddev((*by)[s]);
        }
    }

    // Usage patterns.
    const double overall_mean = v[0];
    int peak_hour = 0;
    double peak_mean = -1.0;
    for (int h = 0; h < 24; ++h) {
        if (hourly[h].empty()) continue;
        const double m = stats::mean(hourly[h]);
        if (m > peak_mean) {
            peak_mean = m;
            peak_hour = h;
        }
    }
    v[k++] = static_cast<double>(peak_hour) / 23.0;
    v[k++] = overall_mean > 0.0 ? peak_mean / overall_mean : 0.0;

    const StratumTotals totals = stratum_totals(series, calendar);
    v[k++] = totals.total > 0.0 ? totals.by_period[static_cast<std::size_t>(Period::Night)] / totals.total : 0.0;

    std::size_t weekday_n = 0, weekend_n = 0;
    for (std::size_t s = 0; s < kStrata; ++s) (s % 2 == 0 ? weekday_n : weekend_n) += bytes_by[s].size();
    const double weekday_mean = weekday_n ? totals.weekday / static_cast<double>(weekday_n) : 0.0;
    const double weekend_mean = weekend_n ? totals.weekend / static_cast<double>(weekend_n) : 0.0;
    v[k++] = totals.weekday > 0.0 ? weekend_mean / weekday_mean : 0.0;

    std::size_t zeros = 0, low = 0;
    for (double x : series.load) {
        if (x == 0.0) ++zeros;
        if (x < tertiles.low) ++low;
    }
    v[k++] = static_cast<double>(zeros) / static_cast<double>(n);
    v[k++] = static_cast<double>(low) / static_cast<double>(n);

    for (double x : v)
        if (!std::isfinite(x)) throw InvalidInput("non-finite feature for AP '" + series.ap_id + "'");
    return fv;
}

StratumTotals stratum_totals(const LoadSeries& series, const CalendarConfig& calendar) {
    StratumTotals t;
    std::vector<double> weekday, weekend;
    std::array<std::vector<double>, 3> by_period;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const Timestamp ts = series.window_start(i);
        (calendar.day_type_of(ts) == DayType::Weekday ? weekday : weekend).push_back(series.load[i]);
        by_period[static_cast<std::size_t>(calendar.period_of(ts))].push_back(series.load[i]);
    }
    t.weekday = stats::sum(weekday);
    t.weekend = stats::sum(weekend);
    for (std::size_t p = 0; p < 3; ++p) t.by_period[p] = stats::sum(by_period[p]);
    // sum of the period totals, so a single-period series has an exact share of 1
    t.total = t.by_period[0] + t.by_period[1] + t.by_period[2];
    return t;
}

Matrix Scaler::apply(const Matrix& raw) const {
    if (raw.cols() != mean.size()) throw InvalidInput("scaler column count mismatch");
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t r = 0; r < raw.rows(); ++r)
        for (std::size_t c = 0; c < raw.cols(); ++c)
            out(r, c) = degenerate[c] ? 0.0 : (raw(r, c) - mean[c]) / stddev[c];
    return out;
}

Matrix Scaler::inverse(const Matrix& scaled) const {
    if (scaled.cols() != mean.size()) throw InvalidInput("scaler column count mismatch");
    Matrix out(scaled.rows(), scaled.cols());
    for (std::size_t r = 0; r < scaled.rows(); ++r)
        for (std::size_t c = 0; c < scaled.cols(); ++c)
            out(r, c) = degenerate[c] ? mean[c] : scaled(r, c) * stddev[c] + mean[c];
    return out;
}

ScaledFeatures scale_features(const Matrix& raw) {
    if (raw.rows() < 2) throw InvalidInput("scaling needs at least 2 rows");
    Scaler s;
    for (std::size_t c = 0; c < raw.cols(); ++c) {
        const auto col = raw.column(c);
        const double m = stats::mean(col);
        const double sd = stats::stddev(col);
        s.mean.push_back(m);
        s.stddev.push_back(sd);
        // constant columns leave rounding-level residue in the std
        s.degenerate.push_back(!(sd > 1e-12 * std::max(1.0, std::abs(m))));
    }
    Matrix scaled = s.apply(raw);
    return {std::move(scaled), std::move(s)};
}

ScaledFeatures scale_features(const std::vector<FeatureVector>& rows) { return scale_features(to_matrix(rows)); }

Matrix to_matrix(const std::vector<FeatureVector>& rows) {
    Matrix m(rows.size(), kFeatureCount);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy(rows[r].values.begin(), rows[r].values.end(), m.row(r).begin());
    return m;
}

}  // namespace apf
