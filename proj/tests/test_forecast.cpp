#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "apf/lstm.hpp"
#include "apf/train.hpp"
#include "apf/windowing.hpp"

using namespace apf;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straightforward per-gate LSTM written from the documented parameter layout.
std::vector<double> reference_forward(const ForecastModel& m, const std::vector<double>& input) {
    const ModelSpec& s = m.spec;
    const auto H = static_cast<std::size_t>(s.hidden_size);
    const auto C = static_cast<std::size_t>(s.input_channels);
    const auto P = static_cast<std::size_t>(s.lookback);
    std::vector<std::vector<double>> seq(P);
    for (std::size_t t = 0; t < P; ++t) seq[t].assign(input.begin() + static_cast<long>(t * C), input.begin() + static_cast<long>((t + 1) * C));
    std::size_t off = 0;
    for (int l = 0; l < s.lstm_layers; ++l) {
        const std::size_t in = seq[0].size();
        const std::size_t W = off, B = off + 4 * H * (in + H);
        off = B + 4 * H;
        std::vector<double> h(H, 0.0), c(H, 0.0);
        std::vector<std::vector<double>> out(P);
        for (std::size_t t = 0; t < P; ++t) {
            std::vector<double> x = seq[t];
            x.insert(x.end(), h.begin(), h.end());
            auto gate = [&](std::size_t g, std::size_t j) {
                const std::size_t row = g * H + j;
                double z = m.params[B + row];
                for (std::size_t q = 0; q < in + H; ++q) z += m.params[W + row * (in + H) + q] * x[q];
                return z;
            };
            std::vector<double> nh(H);
            for (std::size_t j = 0; j < H; ++j) {
                const double i = sig(gate(0, j)), f = sig(gate(1, j)), g = std::tanh(gate(2, j)), o = sig(gate(3, j));
                c[j] = f * c[j] + i * g;
                nh[j] = o * std::tanh(c[j]);
            }
            h = nh;
            out[t] = h;
        }
        seq = out;
    }
    const auto hz = static_cast<std::size_t>(s.horizon);
    std::vector<double> y(hz);
    for (std::size_t k = 0; k < hz; ++k) {
        y[k] = m.params[off + hz * H + k];
        for (std::size_t j = 0; j < H; ++j) y[k] += m.params[off + k * H + j] * seq.back()[j];
    }
    return y;
}

LoadSeries sinusoid(const std::string& id, std::size_t n, double phase, double amp, double period = 24.0) {
    LoadSeries s;
    s.ap_id = id;
    s.step_w = 600;
    for (std::size_t i = 0; i < n; ++i) {
        s.load.push_back(10.0 + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period + phase));
        s.active_users.push_back(1.0);
    }
    return s;
}

}  // namespace

TEST(ModelSpec, ParameterCountsAndStorage) {
    const ModelSpec gm = ModelSpec::for_tier(Tier::GM, 36, 1);
    EXPECT_EQ(gm.param_count(), 50851u);
    EXPECT_EQ(model_storage(gm), 203404u);
    const ModelSpec h6 = ModelSpec::for_tier(Tier::Lk, 36, 6);
    EXPECT_EQ(h6.param_count() - (gm.param_count() - 51), 306u);
    const ModelSpec v2 = ModelSpec::for_tier(Tier::Lkv2, 36, 1);
    EXPECT_EQ(v2.lstm_layers, 5);
    EXPECT_EQ(v2.hidden_size, 200);
    // 4H(1 + H) + 4H + 4 * (4H(2H) + 4H) + H + 1
    EXPECT_EQ(v2.param_count(), 4u * 200 * 201 + 800 + 4u * (4 * 200 * 400 + 800) + 201);
    ModelSpec bad = gm;
    bad.hidden_size = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_EQ(parse_tier("Lkv2"), Tier::Lkv2);
    EXPECT_THROW(parse_tier("big"), ConfigError);
}

TEST(Lstm, ZeroWeightsGiveZeroOutput) {
    ForecastModel m = init_model({.lstm_layers = 2, .hidden_size = 3, .lookback = 5, .horizon = 2}, 1);
    std::fill(m.params.begin(), m.params.end(), 0.0);
    const auto y = forward(m, std::vector<double>{0.3, -1, 2, 0.5, 0.1});
    EXPECT_EQ(y, (std::vector<double>{0.0, 0.0}));
}

TEST(Lstm, HandComputedSingleCell) {
    // One layer, hidden 1, one step: every gate sees weight 0.5 on x and bias 0.
    ForecastModel m = init_model({.lstm_layers = 1, .hidden_size = 1, .lookback = 1, .horizon = 1}, 1);
    std::fill(m.params.begin(), m.params.end(), 0.0);
    for (int g = 0; g < 4; ++g) m.params[static_cast<std::size_t>(g * 2)] = 0.5;  // W is 4 x (1 + 1)
    const ParamLayout layout(m.spec);
    m.params[layout.head_weights] = 2.0;
    m.params[layout.head_bias] = 0.25;
    const double x = 0.8, z = 0.4;
    const double c = sig(z) * std::tanh(z);
    const double expected = 2.0 * sig(z) * std::tanh(c) + 0.25;
    EXPECT_NEAR(forward(m, std::vector<double>{x})[0], expected, 1e-12);
}

TEST(Lstm, MatchesReferenceImplementationOnRandomModels) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 15; ++trial) {
        const ModelSpec spec{.lstm_layers = 1 + trial % 3, .hidden_size = 1 + trial % 5, .lookback = 2 + trial % 4,
                             .horizon = 1 + trial % 3, .input_channels = 1 + trial % 2};
        const ForecastModel m = init_model(spec, static_cast<std::uint64_t>(trial));
        std::vector<double> x(spec.input_size());
        for (double& v : x) v = u(rng);
        const auto got = forward(m, x);
        const auto want = reference_forward(m, x);
        for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
    }
    const ForecastModel m = init_model({.lstm_layers = 1, .hidden_size = 2, .lookback = 2}, 1);
    EXPECT_THROW(forward(m, std::vector<double>{1.0}), InvalidInput);
    EXPECT_THROW(forward(m, std::vector<double>{1.0, std::nan("")}), InvalidInput);
}

TEST(Lstm, InitIsSeededAndForgetBiasIsOne) {
    const ModelSpec spec{.lstm_layers = 2, .hidden_size = 4, .lookback = 3};
    const ForecastModel a = init_model(spec, 9), b = init_model(spec, 9), c = init_model(spec, 10);
    EXPECT_EQ(a.params, b.params);
    EXPECT_NE(a.params, c.params);
    const ParamLayout layout(spec);
    for (const auto& layer : layout.layers)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(a.params[layer.bias + 4 + j], 1.0);
    for (double p : a.params) EXPECT_LE(std::abs(p), 1.0);
}

TEST(Lstm, GradientCheckOnTinyModels) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ModelSpec spec{.lstm_layers = 1 + static_cast<int>(seed % 2), .hidden_size = 2 + static_cast<int>(seed % 3),
                             .lookback = 3 + static_cast<int>(seed % 3), .horizon = 1 + static_cast<int>(seed % 2),
                             .input_channels = 1 + static_cast<int>(seed % 2)};
        EXPECT_LT(gradient_check(spec, seed).max_deviation, 1e-4) << "seed " << seed;
    }
    EXPECT_THROW(gradient_check(ModelSpec{.lstm_layers = 3, .hidden_size = 2, .lookback = 3}, 1), InvalidInput);
}

TEST(Windowing, CountsSplitsAndNormaliserScope) {
    LoadSeries s;
    s.ap_id = "a";
    for (int i = 0; i < 10; ++i) {
        s.load.push_back(i);
        s.active_users.push_back(0);
    }
    s.load[9] = 1000.0;  // only reachable by the test window
    const WindowOptions opt{.lookback = 4, .horizon = 2};
    EXPECT_EQ(window_count(10, opt), 5u);
    EXPECT_EQ(window_count(5, opt), 0u);
    EXPECT_EQ(window_count(10, {.lookback = 4, .horizon = 2, .stride = 2}), 3u);
    const WindowedDataset ds = window_series({s}, opt);
    ASSERT_EQ(ds.size(), 5u);
    EXPECT_EQ(ds.rows(Split::Train).size(), 4u);
    EXPECT_EQ(ds.rows(Split::Val).size(), 0u);
    EXPECT_EQ(ds.rows(Split::Test), std::vector<std::size_t>{4});
    EXPECT_EQ(ds.load_norm[0].min, 0.0);
    EXPECT_EQ(ds.load_norm[0].max, 8.0);
    EXPECT_EQ(ds.inputs(1, 0), 1.0 / 8.0);
    EXPECT_EQ(ds.targets(0, 1), 5.0 / 8.0);
    EXPECT_EQ(ds.start, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Windowing, SplitsAreChronologicalAndShortSeriesWarn) {
    std::vector<LoadSeries> series{sinusoid("a", 200, 0, 1), sinusoid("b", 5, 0, 1)};
    const WindowedDataset ds = window_series(series, {.lookback = 10, .horizon = 3});
    ASSERT_EQ(ds.warnings.size(), 1u);
    std::size_t last_train = 0, first_test = ds.size();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] == Split::Train) last_train = std::max(last_train, ds.start[i]);
        if (ds.split[i] == Split::Test) first_test = std::min(first_test, ds.start[i]);
    }
    EXPECT_LT(last_train, first_test);
    EXPECT_THROW(window_series(series, {.lookback = 0}), ConfigError);
    EXPECT_THROW(window_series(series, {.train_fraction = 0.95, .val_fraction = 0.1}), ConfigError);
}

TEST(Training, LearnsASinusoid) {
    std::vector<LoadSeries> series;
    for (int i = 0; i < 3; ++i) series.push_back(sinusoid("s" + std::to_string(i), 400, 0.7 * i, 5.0));
    const ModelSpec spec{.lstm_layers = 1, .hidden_size = 8, .lookback = 12};
    const TrainConfig cfg{.learning_rate = 0.01, .batch_size = 32, .max_epochs = 15, .patience = 15, .seed = 3};
    const TrainResult r = train_global(series, spec, {.stride = 2}, cfg);
    EXPECT_EQ(r.model.trained_on, -1);
    EXPECT_LE(r.history.back().val_mae, r.history.front().val_mae);
    EXPECT_LE(r.history[static_cast<std::size_t>(r.best_epoch)].val_mae, 0.5 * r.history.front().val_mae);
}

TEST(Training, ZeroLearningRateAndPatience) {
    std::vector<LoadSeries> series{sinusoid("a", 150, 0, 2)};
    const ModelSpec spec{.lstm_layers = 1, .hidden_size = 3, .lookback = 6};
    const WindowedDataset ds = window_series(series, {.lookback = 6, .horizon = 1});
    const ForecastModel m0 = init_model(spec, 4);
    const TrainResult frozen = train(m0, ds, {.learning_rate = 0.0, .max_epochs = 3, .patience = 5});
    EXPECT_EQ(frozen.model.params, m0.params);
    EXPECT_EQ(frozen.best_epoch, 0);
    EXPECT_EQ(frozen.history.size(), 4u);
    // Patience 0 stops at the first epoch that fails to improve.
    const TrainResult stopped = train(m0, ds, {.learning_rate = 0.0, .max_epochs = 10, .patience = 0});
    EXPECT_EQ(stopped.history.size(), 2u);
    EXPECT_THROW(train(m0, ds, {.batch_size = 0}), ConfigError);
}

TEST(Training, DeterministicAndClusterRestricted) {
    std::vector<LoadSeries> series{sinusoid("a", 120, 0, 2), sinusoid("b", 120, 1, 4), sinusoid("c", 120, 2, 1)};
    const std::vector<int> labels{0, 1, 0};
    const ModelSpec spec{.lstm_layers = 1, .hidden_size = 3, .lookback = 6};
    const TrainConfig cfg{.learning_rate = 0.01, .batch_size = 16, .max_epochs = 2, .seed = 8};
    const TrainResult a = train_cluster(series, labels, 0, spec, {}, cfg);
    const TrainResult b = train_cluster(series, labels, 0, spec, {}, cfg);
    EXPECT_EQ(a.model.params, b.model.params);
    EXPECT_EQ(a.model.trained_on, 0);
    EXPECT_EQ(cluster_members(series, labels, 0).size(), 2u);
    EXPECT_THROW(cluster_members(series, labels, 2), InvalidInput);
}
