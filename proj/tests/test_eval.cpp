#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "apf/eval.hpp"
#include "apf/train.hpp"
#include "support.hpp"

using namespace apf;

TEST(Mae, ExamplesAndErrors) {
    EXPECT_NEAR(mae(std::vector<double>{0.1, 0.2}, std::vector<double>{0.2, 0.0}), 0.15, 1e-15);
    EXPECT_EQ(mae(std::vector<double>{0.5}, std::vector<double>{0.5}), 0.0);
    EXPECT_THROW(mae(std::vector<double>{1, 2}, std::vector<double>{1}), InvalidInput);
    EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), InvalidInput);
    EXPECT_THROW(mae(std::vector<double>{1}, std::vector<double>{std::nan("")}), InvalidInput);
}

TEST(Mae, SymmetricNonNegativeAndTriangle) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(6), b(6), c(6);
        for (std::size_t i = 0; i < 6; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
            c[i] = u(rng);
        }
        EXPECT_GE(mae(a, b), 0.0);
        EXPECT_EQ(mae(a, b), mae(b, a));
        EXPECT_LE(mae(a, c), mae(a, b) + mae(b, c) + 1e-15);
    }
}

TEST(AggregateError, WindowWeightedOverallAndPerCluster) {
    const AggregateError e = aggregate_error({{0, {0.004}}, {1, {0.008}}});
    EXPECT_NEAR(e.overall, 0.006, 1e-15);
    EXPECT_EQ(e.per_cluster.at(0), 0.004);
    const AggregateError w = aggregate_error({{0, {0.0, 0.0, 0.0}}, {1, {0.004}}});
    EXPECT_NEAR(w.overall, 0.001, 1e-15);
    EXPECT_EQ(w.window_counts.at(0), 3u);
    EXPECT_THROW(aggregate_error({}), InvalidInput);
}

TEST(P99, DenormalisedMegabytes) {
    Matrix targets(100, 1), preds(100, 1);
    for (std::size_t i = 0; i < 100; ++i) preds(i, 0) = static_cast<double>(i + 1) / 100.0;
    const std::vector<MinMax> norm(100, MinMax{0.0, 100.0 * kBytesPerMB});
    EXPECT_NEAR(p99_abs_error(targets, preds, norm), 99.01, 1e-9);
}

TEST(Improvement, ReferenceClusterValues) {
    using namespace apf::fixtures;
    EXPECT_NEAR(improvement(kGm10[1], kLk10[1]), 0.25, 1e-12);
    EXPECT_NEAR(improvement(kGm10[3], kLk10[3]), 0.602, 5e-4);
    EXPECT_EQ(improvement(1.0, 1.0), 0.0);
    EXPECT_LT(improvement(1.0, 2.0), 0.0);
    EXPECT_THROW(improvement(0.0, 1.0), InvalidInput);
}

TEST(PerformanceTable, RowsLookupAndDuplicates) {
    PerformanceTable t = apf::fixtures::reference_table(10);
    EXPECT_EQ(t.rows.size(), 10u);
    EXPECT_EQ(t.clusters(), (std::vector<int>{0, 1, 2, 3, 4}));
    EXPECT_EQ(t.horizons(), std::vector<int>{10});
    EXPECT_EQ(apf::fixtures::reference_table(10, true).rows.size(), 13u);
    ASSERT_NE(t.find(3, Tier::Lk, 10), nullptr);
    EXPECT_EQ(t.find(3, Tier::Lk, 10)->mae, 0.0013);
    EXPECT_EQ(t.find(3, Tier::Lkv2, 10), nullptr);
    EXPECT_THROW(t.add(t.rows.front()), InvalidInput);
    EXPECT_EQ(NominalSizes{}.of(Tier::Lkv2), 3.5 * 1048576.0);
}

TEST(PerformanceTable, BuildFromModelsMatchesDirectEvaluation) {
    std::vector<LoadSeries> series;
    for (int i = 0; i < 4; ++i) {
        LoadSeries s;
        s.ap_id = "ap" + std::to_string(i);
        for (int t = 0; t < 80; ++t) {
            s.load.push_back(5.0 + (i + 1) * std::sin(0.3 * t + i));
            s.active_users.push_back(1.0);
        }
        series.push_back(s);
    }
    const ModelSpec spec{.lstm_layers = 1, .hidden_size = 3, .lookback = 6};
    const WindowedDataset ds = window_series(series, {.lookback = 6, .horizon = 1});
    const ForecastModel gm = init_model(spec, 1), lk0 = init_model(spec, 2);
    EvaluationSet set;
    set.horizon_minutes = 10;
    set.data = &ds;
    set.series_cluster = {0, 1, 0, 1};
    set.models.gm = &gm;
    set.models.lk[0] = &lk0;
    const PerformanceTable t = build_performance_table({set}, NominalSizes{});
    EXPECT_EQ(t.rows.size(), 3u);

    std::vector<std::size_t> rows0;
    for (std::size_t r : ds.rows(Split::Test))
        if (set.series_cluster[ds.series[r]] == 0) rows0.push_back(r);
    const PerformanceRow* g0 = t.find(0, Tier::GM, 10);
    ASSERT_NE(g0, nullptr);
    EXPECT_NEAR(g0->mae, mean_window_mae(gm, ds, rows0), 1e-12);
    EXPECT_NEAR(t.find(0, Tier::Lk, 10)->mae, mean_window_mae(lk0, ds, rows0), 1e-12);
    EXPECT_EQ(g0->n_series, 2u);
    EXPECT_EQ(g0->n_windows, rows0.size());
    EXPECT_EQ(g0->storage_bytes, 1048576.0);
    EXPECT_EQ(g0->param_count, spec.param_count());

    set.models.gm = nullptr;
    EXPECT_THROW(build_performance_table({set}, NominalSizes{}), InvalidInput);
}
