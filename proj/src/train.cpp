#include "apf/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace apf {

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    if (patience < 0) throw ConfigError("patience must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
    if (epsilon <= 0.0) throw ConfigError("Adam epsilon must be positive");
}

Matrix predict(const ForecastModel& model, const WindowedDataset& data, std::span<const std::size_t> rows) {
    LstmEngine engine(model.spec);
    const auto h = static_cast<std::size_t>(model.spec.horizon);
    Matrix out(rows.size(), h);
    for (std::size_t i = 0; i < rows.size(); ++i) engine.forward(model.params, data.inputs.row(rows[i]), out.row(i));
    return out;
}

double mean_window_mae(const ForecastModel& model, const WindowedDataset& data, std::span<const std::size_t> rows) {
    if (rows.empty()) return 0.0;
    const Matrix pred = predict(model, data, rows);
    std::vector<double> per_window(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < pred.cols(); ++k) s += std::abs(pred(i, k) - data.targets(rows[i], k));
        per_window[i] = s / static_cast<double>(pred.cols());
    }
    return stats::mean(per_window);
}

namespace {

double full_mse(const ForecastModel& model, LstmEngine& engine, const WindowedDataset& data,
                std::span<const std::size_t> rows) {
    if (rows.empty()) return 0.0;
    const auto h = static_cast<std::size_t>(model.spec.horizon);
    std::vector<double> out(h), per(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        engine.forward(model.params, data.inputs.row(rows[i]), out);
        double s = 0.0;
        for (std::size_t k = 0; k < h; ++k) s += (out[k] - data.targets(rows[i], k)) * (out[k] - data.targets(rows[i], k));
        per[i] = s / static_cast<double>(h);
    }
    return stats::mean(per);
}

}  // namespace

TrainResult train(ForecastModel model, const WindowedDataset& data, const TrainConfig& config) {
    config.validate();
    if (data.horizon != model.spec.horizon || data.lookback != model.spec.lookback ||
        data.input_channels != model.spec.input_channels)
        throw InvalidInput("dataset shape does not match the model spec");
    const std::vector<std::size_t> train_rows = data.rows(Split::Train);
    if (train_rows.empty()) throw InvalidInput("training split is empty");
    std::vector<std::size_t> val_rows = data.rows(Split::Val);
    if (val_rows.empty()) val_rows = train_rows;

    LstmEngine engine(model.spec);
    const std::size_t n_params = model.params.size();
    std::vector<double> grad, m1(n_params, 0.0), m2(n_params, 0.0);

    TrainResult result;
    double best_val = mean_window_mae(model, data, val_rows);
    result.history.push_back({0, full_mse(model, engine, data, train_rows), best_val});
    result.model = model;
    result.best_epoch = 0;

    std::vector<std::size_t> order = train_rows;
    std::vector<double> batch_losses;
    long long step = 0;
    int bad_epochs = 0;
    const auto batch = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::mt19937_64 rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        batch_losses.clear();
        for (std::size_t b = 0; b < order.size(); b += batch) {
            const std::size_t e = std::min(order.size(), b + batch);
            std::span<const std::size_t> rows(order.data() + b, e - b);
            const double loss = loss_and_gradient(model, engine, data.inputs, data.targets, rows, grad);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << ", batch " << b / batch << " (loss " << loss
                    << ", lr " << config.learning_rate << ")";
                throw DivergenceError(msg.str());
            }
            batch_losses.push_back(loss * static_cast<double>(rows.size()));
            ++step;
            if (config.learning_rate == 0.0) continue;
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < n_params; ++p) {
                const double g = grad[p];
                m1[p] = config.beta1 * m1[p] + (1.0 - config.beta1) * g;
                m2[p] = config.beta2 * m2[p] + (1.0 - config.beta2) * g * g;
                model.params[p] -= config.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + config.epsilon);
            }
        }
        const double train_loss = stats::sum(batch_losses) / static_cast<double>(order.size());
        const double val = mean_window_mae(model, data, val_rows);
        if (!std::isfinite(val)) throw DivergenceError("validation MAE is not finite at epoch " + std::to_string(epoch));
        result.history.push_back({epoch, train_loss, val});
        if (val < best_val) {
            best_val = val;
            result.model = model;
            result.best_epoch = epoch;
            bad_epochs = 0;
        } else if (++bad_epochs > config.patience) {
            break;
        }
    }
    return result;
}

std::vector<LoadSeries> cluster_members(const std::vector<LoadSeries>& series, std::span<const int> assignments,
                                        int cluster) {
    if (assignments.size() != series.size()) throw InvalidInput("assignment count does not match series count");
    std::vector<LoadSeries> members;
    for (std::size_t i = 0; i < series.size(); ++i)
        if (assignments[i] == cluster) members.push_back(series[i]);
    if (members.empty()) throw InvalidInput("cluster " + std::to_string(cluster) + " has no members");
    return members;
}

TrainResult train_global(const std::vector<LoadSeries>& series, const ModelSpec& spec, const WindowOptions& windows,
                         const TrainConfig& config) {
    WindowOptions w = windows;
    w.lookback = spec.lookback;
    w.horizon = spec.horizon;
    w.input_channels = spec.input_channels;
    const WindowedDataset data = window_series(series, w);
    TrainResult r = train(init_model(spec, config.seed), data, config);
    r.model.trained_on = -1;
    return r;
}

TrainResult train_cluster(const std::vector<LoadSeries>& series, std::span<const int> assignments, int cluster,
                          const ModelSpec& spec, const WindowOptions& windows, const TrainConfig& config) {
    const std::vector<LoadSeries> members = cluster_members(series, assignments, cluster);
    TrainResult r = train_global(members, spec, windows, config);
    r.model.trained_on = cluster;
    return r;
}

}  // namespace apf
