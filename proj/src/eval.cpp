#include "apf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "apf/train.hpp"

namespace apf {

double mae(std::span<const double> target, std::span<const double> prediction) {
    if (target.size() != prediction.size()) throw InvalidInput("mae: length mismatch");
    if (target.empty()) throw InvalidInput("mae: empty input");
    std::vector<double> abs_err(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (!std::isfinite(target[i]) || !std::isfinite(prediction[i])) throw InvalidInput("mae: non-finite value");
        abs_err[i] = std::abs(target[i] - prediction[i]);
    }
    return stats::mean(abs_err);
}

AggregateError aggregate_error(const std::vector<ClusterErrors>& groups) {
    AggregateError out;
    std::vector<double> all;
    for (const auto& g : groups) {
        if (g.window_errors.empty()) continue;
        all.insert(all.end(), g.window_errors.begin(), g.window_errors.end());
        out.per_cluster[g.cluster] = stats::mean(g.window_errors);
        out.window_counts[g.cluster] = g.window_errors.size();
    }
    if (all.empty()) throw InvalidInput("aggregate_error: no window errors");
    out.overall = stats::mean(all);
    return out;
}

double p99_abs_error(const Matrix& targets, const Matrix& predictions, std::span<const MinMax> row_denormalizers) {
    if (targets.rows() != predictions.rows() || targets.cols() != predictions.cols())
        throw InvalidInput("p99_abs_error: shape mismatch");
    if (row_denormalizers.size() != targets.rows()) throw InvalidInput("p99_abs_error: one denormaliser per row required");
    if (targets.empty()) throw InvalidInput("p99_abs_error: no error samples");
    std::vector<double> errors;
    errors.reserve(targets.rows() * targets.cols());
    for (std::size_t r = 0; r < targets.rows(); ++r)
        for (std::size_t k = 0; k < targets.cols(); ++k)
            errors.push_back(std::abs(row_denormalizers[r].denormalize(targets(r, k)) -
                                      row_denormalizers[r].denormalize(predictions(r, k))) /
                             kBytesPerMB);
    return stats::quantile(errors, 0.99);
}

double improvement(double base_mae, double new_mae) {
    if (!(base_mae > 0.0)) throw InvalidInput("improvement: base MAE must be positive");
    return (base_mae - new_mae) / base_mae;
}

double NominalSizes::of(Tier tier) const {
    switch (tier) {
        case Tier::GM: return gm;
        case Tier::Lk: return lk;
        case Tier::Lkv2: return lkv2;
    }
    return 0.0;
}

const PerformanceRow* PerformanceTable::find(int cluster, Tier tier, int horizon_minutes) const {
    for (const auto& r : rows)
        if (r.cluster == cluster && r.tier == tier && r.horizon_minutes == horizon_minutes) return &r;
    return nullptr;
}

void PerformanceTable::add(PerformanceRow row) {
    if (find(row.cluster, row.tier, row.horizon_minutes))
        throw InvalidInput("duplicate performance row for cluster " + std::to_string(row.cluster) + ", tier " +
                           std::string(to_string(row.tier)) + ", horizon " + std::to_string(row.horizon_minutes));
    rows.push_back(row);
}

std::vector<int> PerformanceTable::clusters() const {
    std::set<int> s;
    for (const auto& r : rows) s.insert(r.cluster);
    return {s.begin(), s.end()};
}

std::vector<int> PerformanceTable::horizons() const {
    std::set<int> s;
    for (const auto& r : rows) s.insert(r.horizon_minutes);
    return {s.begin(), s.end()};
}

namespace {

PerformanceRow evaluate_rows(const ForecastModel& model, const WindowedDataset& data,
                             const std::vector<std::size_t>& rows) {
    PerformanceRow out;
    out.n_windows = rows.size();
    out.param_count = model.param_count();
    out.model_seed = model.seed;
    if (rows.empty()) return out;
    const Matrix pred = predict(model, data, rows);
    Matrix targets(rows.size(), data.targets.cols());
    std::vector<MinMax> denorm(rows.size());
    std::vector<double> window_mae(rows.size());
    std::map<std::size_t, std::vector<double>> by_series;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(data.targets.row(rows[i]).begin(), data.targets.row(rows[i]).end(), targets.row(i).begin());
        denorm[i] = data.load_norm[data.series[rows[i]]];
        window_mae[i] = mae(targets.row(i), pred.row(i));
        by_series[data.series[rows[i]]].push_back(window_mae[i]);
    }
    out.mae = stats::mean(window_mae);
    std::vector<double> series_means;
    for (const auto& [s, errs] : by_series) series_means.push_back(stats::mean(errs));
    out.mae_series_mean = stats::mean(series_means);
    out.n_series = by_series.size();
    out.p99_abs_error_mb = p99_abs_error(targets, pred, denorm);
    return out;
}

}  // namespace

PerformanceTable build_performance_table(const std::vector<EvaluationSet>& sets, const NominalSizes& sizes) {
    PerformanceTable table;
    for (const auto& set : sets) {
        if (!set.models.gm) throw InvalidInput("no GM for horizon " + std::to_string(set.horizon_minutes) + " min");
        if (!set.data) throw InvalidInput("no evaluation data for horizon " + std::to_string(set.horizon_minutes));
        const WindowedDataset& data = *set.data;
        if (set.series_cluster.size() != data.series_ids.size())
            throw InvalidInput("series_cluster must give one cluster per source series");

        std::map<int, std::vector<std::size_t>> test_rows;
        for (std::size_t r = 0; r < data.size(); ++r)
            if (data.split[r] == Split::Test) test_rows[set.series_cluster[data.series[r]]].push_back(r);
        std::set<int> clusters(set.series_cluster.begin(), set.series_cluster.end());

        for (int c : clusters) {
            const auto& rows = test_rows[c];
            auto emit = [&](const ForecastModel& model, Tier tier) {
                PerformanceRow row = evaluate_rows(model, data, rows);
                row.cluster = c;
                row.tier = tier;
                row.horizon_minutes = set.horizon_minutes;
                row.storage_bytes = sizes.of(tier);
                table.add(row);
            };
            emit(*set.models.gm, Tier::GM);
            if (auto it = set.models.lk.find(c); it != set.models.lk.end() && it->second) emit(*it->second, Tier::Lk);
            if (auto it = set.models.lkv2.find(c); it != set.models.lkv2.end() && it->second)
                emit(*it->second, Tier::Lkv2);
        }
    }
    return table;
}

}  // namespace apf
