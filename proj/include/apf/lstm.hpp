#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apf/core.hpp"

namespace apf {

/// Model tiers: the shared global model and the two cluster-specific sizes.
enum class Tier { GM, Lk, Lkv2 };

std::string_view to_string(Tier tier);
Tier parse_tier(std::string_view name);

struct ModelSpec {
    Tier tier = Tier::GM;
    int lstm_layers = 3;
    int hidden_size = 50;
    int lookback = 36;
    int horizon = 1;
    int input_channels = 1;

    /// Standard architecture for a tier: 3 x 50 for GM and Lk, 5 x 200 for Lkv2.
    static ModelSpec for_tier(Tier tier, int lookback, int horizon, int input_channels = 1);

    /// Throws ConfigError on any non-positive dimension.
    void validate() const;
    std::size_t param_count() const;
    std::size_t input_size() const { return static_cast<std::size_t>(lookback * input_channels); }

    bool operator==(const ModelSpec&) const = default;
};

/// Offsets of each tensor inside the flat parameter vector.
///
/// Layer l stores W_l (4H x (in_l + H), row-major, gate blocks in the order
/// input, forget, cell, output; columns are [x_t, h_{t-1}]) followed by
/// b_l (4H). The head stores W_out (h x H, row-major) then b_out (h).
struct ParamLayout {
    struct Layer {
        std::size_t input = 0;
        std::size_t weights = 0;
        std::size_t bias = 0;
    };
    std::vector<Layer> layers;
    std::size_t head_weights = 0;
    std::size_t head_bias = 0;
    std::size_t total = 0;

    explicit ParamLayout(const ModelSpec& spec);
};

struct ForecastModel {
    ModelSpec spec;
    std::vector<double> params;
    int trained_on = -1;  // -1: all series, otherwise the cluster index
    std::uint64_t seed = 0;

    std::size_t param_count() const { return params.size(); }
};

/// Uniform(-s, s) weights with s = 1 / sqrt(hidden_size); forget-gate biases 1.
ForecastModel init_model(const ModelSpec& spec, std::uint64_t seed);

/// Stacked-LSTM forward pass over P steps; the last hidden state of the top
/// layer feeds an affine head with `horizon` outputs. Input is step-major
/// (P x channels). Throws InvalidInput on NaN or a length mismatch.
std::vector<double> forward(const ForecastModel& model, std::span<const double> input);

/// Reusable forward/backward workspace for one architecture.
class LstmEngine {
public:
    explicit LstmEngine(const ModelSpec& spec);

    /// Forward pass keeping the activations needed by backward().
    void forward(std::span<const double> params, std::span<const double> input, std::span<double> output);

    /// Accumulate d(loss)/d(params) into `grad` given d(loss)/d(output) for
    /// the most recent forward() call.
    void backward(std::span<const double> params, std::span<const double> d_output, std::span<double> grad);

    const ModelSpec& spec() const { return spec_; }

private:
    ModelSpec spec_;
    ParamLayout layout_;
    std::size_t steps_ = 0;
    std::size_t hidden_ = 0;
    // Per layer, per step caches (step-major).
    std::vector<std::vector<double>> concat_;  // [x_t, h_{t-1}]
    std::vector<std::vector<double>> gates_;   // activated i, f, g, o
    std::vector<std::vector<double>> cell_;    // c_t
    std::vector<std::vector<double>> cell_tanh_;
    std::vector<double> top_hidden_;
    // Backward scratch.
    std::vector<double> dz_, dconcat_, dh_, dc_, d_below_, d_above_;
};

/// Mean squared error over the selected rows and all horizon steps; the
/// gradient w.r.t. the parameters is written to `grad` (resized and zeroed).
double loss_and_gradient(const ForecastModel& model, LstmEngine& engine, const Matrix& inputs,
                         const Matrix& targets, std::span<const std::size_t> rows, std::vector<double>& grad);

struct GradientCheckResult {
    double max_deviation = 0.0;  // relative, or absolute where both gradients are below 1e-7
    std::size_t worst_param = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Central finite differences (step eps) on every parameter versus BPTT.
GradientCheckResult gradient_check(const ForecastModel& model, const Matrix& inputs, const Matrix& targets,
                                   double eps = 1e-5);

/// Random model and batch for a small spec (<= 2 layers, hidden <= 4, P <= 6).
GradientCheckResult gradient_check(const ModelSpec& spec, std::uint64_t seed);

/// Single-precision storage footprint: 4 bytes per parameter.
std::size_t model_storage(const ForecastModel& model);
std::size_t model_storage(const ModelSpec& spec);

}  // namespace apf
