#include "apf/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace apf {

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::GM: return "GM";
        case Tier::Lk: return "Lk";
        case Tier::Lkv2: return "Lkv2";
    }
    return "?";
}

Tier parse_tier(std::string_view name) {
    if (name == "GM" || name == "gm") return Tier::GM;
    if (name == "Lk" || name == "lk") return Tier::Lk;
    if (name == "Lkv2" || name == "lkv2") return Tier::Lkv2;
    throw ConfigError("unknown model tier '" + std::string(name) + "'");
}

ModelSpec ModelSpec::for_tier(Tier tier, int lookback, int horizon, int input_channels) {
    ModelSpec s;
    s.tier = tier;
    s.lstm_layers = tier == Tier::Lkv2 ? 5 : 3;
    s.hidden_size = tier == Tier::Lkv2 ? 200 : 50;
    s.lookback = lookback;
    s.horizon = horizon;
    s.input_channels = input_channels;
    return s;
}

void ModelSpec::validate() const {
    if (lstm_layers < 1) throw ConfigError("model spec: lstm_layers must be >= 1");
    if (hidden_size < 1) throw ConfigError("model spec: hidden_size must be >= 1");
    if (lookback < 1) throw ConfigError("model spec: lookback must be >= 1");
    if (horizon < 1) throw ConfigError("model spec: horizon must be >= 1");
    if (input_channels < 1) throw ConfigError("model spec: input_channels must be >= 1");
}

std::size_t ModelSpec::param_count() const {
    validate();
    return ParamLayout(*this).total;
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
    const auto h = static_cast<std::size_t>(spec.hidden_size);
    std::size_t offset = 0;
    for (int l = 0; l < spec.lstm_layers; ++l) {
        Layer layer;
        layer.input = l == 0 ? static_cast<std::size_t>(spec.input_channels) : h;
        layer.weights = offset;
        offset += 4 * h * (layer.input + h);
        layer.bias = offset;
        offset += 4 * h;
        layers.push_back(layer);
    }
    head_weights = offset;
    offset += static_cast<std::size_t>(spec.horizon) * h;
    head_bias = offset;
    offset += static_cast<std::size_t>(spec.horizon);
    total = offset;
}

ForecastModel init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    const ParamLayout layout(spec);
    ForecastModel m;
    m.spec = spec;
    m.seed = seed;
    m.params.resize(layout.total);
    std::mt19937_64 rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(spec.hidden_size));
    std::uniform_real_distribution<double> dist(-s, s);
    for (double& p : m.params) p = dist(rng);
    const auto h = static_cast<std::size_t>(spec.hidden_size);
    for (const auto& layer : layout.layers)
        for (std::size_t j = 0; j < h; ++j) m.params[layer.bias + h + j] = 1.0;
    return m;
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

LstmEngine::LstmEngine(const ModelSpec& spec)
    : spec_(spec), layout_((spec.validate(), spec)) {
    steps_ = static_cast<std::size_t>(spec.lookback);
    hidden_ = static_cast<std::size_t>(spec.hidden_size);
    const std::size_t layers = layout_.layers.size();
    concat_.resize(layers);
    gates_.resize(layers);
    cell_.resize(layers);
    cell_tanh_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t width = layout_.layers[l].input + hidden_;
        concat_[l].resize(steps_ * width);
        gates_[l].resize(steps_ * 4 * hidden_);
        cell_[l].resize(steps_ * hidden_);
        cell_tanh_[l].resize(steps_ * hidden_);
    }
    top_hidden_.resize(hidden_);
    dz_.resize(4 * hidden_);
    dh_.resize(hidden_);
    dc_.resize(hidden_);
    std::size_t widest = 0;
    for (const auto& layer : layout_.layers) widest = std::max(widest, layer.input + hidden_);
    dconcat_.resize(widest);
    d_below_.resize(steps_ * hidden_);
    d_above_.resize(steps_ * hidden_);
}

void LstmEngine::forward(std::span<const double> params, std::span<const double> input, std::span<double> output) {
    const std::size_t H = hidden_;
    const std::size_t channels = static_cast<std::size_t>(spec_.input_channels);
    if (input.size() != steps_ * channels) throw InvalidInput("forward: input length does not match lookback x channels");
    if (output.size() != static_cast<std::size_t>(spec_.horizon)) throw InvalidInput("forward: output length mismatch");
    if (params.size() != layout_.total) throw InvalidInput("forward: parameter count mismatch");

    for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
        const auto& layer = layout_.layers[l];
        const std::size_t in = layer.input;
        const std::size_t width = in + H;
        const double* W = params.data() + layer.weights;
        const double* b = params.data() + layer.bias;
        for (std::size_t t = 0; t < steps_; ++t) {
            double* x = concat_[l].data() + t * width;
            // input part
            if (l == 0) {
                for (std::size_t c = 0; c < in; ++c) x[c] = input[t * channels + c];
            } else {
                const double* gates_below = gates_[l - 1].data() + t * 4 * H;
                const double* tanh_below = cell_tanh_[l - 1].data() + t * H;
                for (std::size_t j = 0; j < H; ++j) x[j] = gates_below[3 * H + j] * tanh_below[j];
            }
            // recurrent part
            if (t == 0) {
                std::fill(x + in, x + width, 0.0);
            } else {
                const double* g_prev = gates_[l].data() + (t - 1) * 4 * H;
                const double* ct_prev = cell_tanh_[l].data() + (t - 1) * H;
                for (std::size_t j = 0; j < H; ++j) x[in + j] = g_prev[3 * H + j] * ct_prev[j];
            }
            double* g = gates_[l].data() + t * 4 * H;
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const double* w = W + r * width;
                double z = b[r];
                for (std::size_t c = 0; c < width; ++c) z += w[c] * x[c];
                g[r] = z;
            }
            double* cell = cell_[l].data() + t * H;
            double* ct = cell_tanh_[l].data() + t * H;
            const double* c_prev = t == 0 ? nullptr : cell_[l].data() + (t - 1) * H;
            for (std::size_t j = 0; j < H; ++j) {
                const double ig = sigmoid(g[j]);
                const double fg = sigmoid(g[H + j]);
                const double cg = std::tanh(g[2 * H + j]);
                const double og = sigmoid(g[3 * H + j]);
                g[j] = ig;
                g[H + j] = fg;
                g[2 * H + j] = cg;
                g[3 * H + j] = og;
                cell[j] = (c_prev ? fg * c_prev[j] : 0.0) + ig * cg;
                ct[j] = std::tanh(cell[j]);
            }
        }
    }

    const std::size_t top = layout_.layers.size() - 1;
    const double* g_last = gates_[top].data() + (steps_ - 1) * 4 * H;
    const double* ct_last = cell_tanh_[top].data() + (steps_ - 1) * H;
    for (std::size_t j = 0; j < H; ++j) top_hidden_[j] = g_last[3 * H + j] * ct_last[j];
    const double* Wo = params.data() + layout_.head_weights;
    const double* bo = params.data() + layout_.head_bias;
    for (std::size_t k = 0; k < output.size(); ++k) {
        double y = bo[k];
        for (std::size_t j = 0; j < H; ++j) y += Wo[k * H + j] * top_hidden_[j];
        output[k] = y;
    }
}

void LstmEngine::backward(std::span<const double> params, std::span<const double> d_output, std::span<double> grad) {
    const std::size_t H = hidden_;
    if (grad.size() != layout_.total) throw InvalidInput("backward: gradient buffer size mismatch");
    const double* Wo = params.data() + layout_.head_weights;
    double* gWo = grad.data() + layout_.head_weights;
    double* gbo = grad.data() + layout_.head_bias;

    // d(loss)/d(h_T) of the top layer; lower layers receive a gradient at every step.
    std::fill(d_above_.begin(), d_above_.end(), 0.0);
    double* dtop = d_above_.data() + (steps_ - 1) * H;
    for (std::size_t k = 0; k < d_output.size(); ++k) {
        const double dy = d_output[k];
        gbo[k] += dy;
        for (std::size_t j = 0; j < H; ++j) {
            gWo[k * H + j] += dy * top_hidden_[j];
            dtop[j] += dy * Wo[k * H + j];
        }
    }

    for (std::size_t li = layout_.layers.size(); li-- > 0;) {
        const auto& layer = layout_.layers[li];
        const std::size_t in = layer.input;
        const std::size_t width = in + H;
        const double* W = params.data() + layer.weights;
        double* gW = grad.data() + layer.weights;
        double* gb = grad.data() + layer.bias;
        std::fill(dh_.begin(), dh_.end(), 0.0);
        std::fill(dc_.begin(), dc_.end(), 0.0);
        if (li > 0) std::fill(d_below_.begin(), d_below_.end(), 0.0);

        for (std::size_t t = steps_; t-- > 0;) {
            const double* g = gates_[li].data() + t * 4 * H;
            const double* ct = cell_tanh_[li].data() + t * H;
            const double* c_prev = t == 0 ? nullptr : cell_[li].data() + (t - 1) * H;
            const double* above = d_above_.data() + t * H;
            for (std::size_t j = 0; j < H; ++j) {
                const double dh = dh_[j] + above[j];
                const double ig = g[j], fg = g[H + j], cg = g[2 * H + j], og = g[3 * H + j];
                const double dc = dc_[j] + dh * og * (1.0 - ct[j] * ct[j]);
                dz_[j] = dc * cg * ig * (1.0 - ig);
                dz_[H + j] = c_prev ? dc * c_prev[j] * fg * (1.0 - fg) : 0.0;
                dz_[2 * H + j] = dc * ig * (1.0 - cg * cg);
                dz_[3 * H + j] = dh * ct[j] * og * (1.0 - og);
                dc_[j] = dc * fg;
            }
            const double* x = concat_[li].data() + t * width;
            std::fill(dconcat_.begin(), dconcat_.begin() + static_cast<std::ptrdiff_t>(width), 0.0);
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const double dz = dz_[r];
                if (dz == 0.0) continue;
                gb[r] += dz;
                double* gw = gW + r * width;
                const double* w = W + r * width;
                for (std::size_t c = 0; c < width; ++c) {
                    gw[c] += dz * x[c];
                    dconcat_[c] += dz * w[c];
                }
            }
            for (std::size_t j = 0; j < H; ++j) dh_[j] = dconcat_[in + j];
            if (li > 0) {
                double* below = d_below_.data() + t * H;
                for (std::size_t j = 0; j < H; ++j) below[j] = dconcat_[j];
            }
        }
        if (li > 0) std::swap(d_above_, d_below_);
    }
}

std::vector<double> forward(const ForecastModel& model, std::span<const double> input) {
    for (double x : input)
        if (std::isnan(x)) throw InvalidInput("forward: NaN in input");
    LstmEngine engine(model.spec);
    std::vector<double> out(static_cast<std::size_t>(model.spec.horizon));
    engine.forward(model.params, input, out);
    return out;
}

double loss_and_gradient(const ForecastModel& model, LstmEngine& engine, const Matrix& inputs, const Matrix& targets,
                         std::span<const std::size_t> rows, std::vector<double>& grad) {
    grad.assign(model.params.size(), 0.0);
    if (rows.empty()) return 0.0;
    const auto h = static_cast<std::size_t>(model.spec.horizon);
    const double scale = 1.0 / static_cast<double>(rows.size() * h);
    std::vector<double> out(h), dout(h);
    double loss = 0.0;
    for (std::size_t r : rows) {
        engine.forward(model.params, inputs.row(r), out);
        const auto y = targets.row(r);
        for (std::size_t k = 0; k < h; ++k) {
            const double e = out[k] - y[k];
            loss += e * e;
            dout[k] = 2.0 * e * scale;
        }
        engine.backward(model.params, dout, grad);
    }
    return loss * scale;
}

namespace {
double batch_loss(const ForecastModel& model, LstmEngine& engine, const Matrix& inputs, const Matrix& targets) {
    const auto h = static_cast<std::size_t>(model.spec.horizon);
    std::vector<double> out(h);
    double loss = 0.0;
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        engine.forward(model.params, inputs.row(r), out);
        for (std::size_t k = 0; k < h; ++k) loss += (out[k] - targets(r, k)) * (out[k] - targets(r, k));
    }
    return loss / static_cast<double>(inputs.rows() * h);
}
}  // namespace

GradientCheckResult gradient_check(const ForecastModel& model, const Matrix& inputs, const Matrix& targets, double eps) {
    LstmEngine engine(model.spec);
    std::vector<std::size_t> rows(inputs.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    std::vector<double> analytic;
    loss_and_gradient(model, engine, inputs, targets, rows, analytic);

    ForecastModel probe = model;
    GradientCheckResult result;
    for (std::size_t p = 0; p < probe.params.size(); ++p) {
        const double orig = probe.params[p];
        probe.params[p] = orig + eps;
        const double up = batch_loss(probe, engine, inputs, targets);
        probe.params[p] = orig - eps;
        const double down = batch_loss(probe, engine, inputs, targets);
        probe.params[p] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double scale = std::max(std::abs(analytic[p]), std::abs(numeric));
        const double dev = scale < 1e-7 ? std::abs(analytic[p] - numeric) : std::abs(analytic[p] - numeric) / scale;
        if (p == 0 || dev > result.max_deviation) {
            result.max_deviation = dev;
            result.worst_param = p;
            result.analytic = analytic[p];
            result.numeric = numeric;
        }
    }
    return result;
}

GradientCheckResult gradient_check(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.lstm_layers > 2 || spec.hidden_size > 4 || spec.lookback > 6)
        throw InvalidInput("gradient_check: spec too large (<= 2 layers, hidden <= 4, lookback <= 6)");
    ForecastModel model = init_model(spec, seed);
    std::mt19937_64 rng(derive_seed(seed, "gradcheck", 0));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    // Spread weights beyond the init range so gates leave their linear regime.
    for (double& p : model.params) p *= 2.0;
    const std::size_t batch = 3;
    Matrix inputs(batch, spec.input_size());
    Matrix targets(batch, static_cast<std::size_t>(spec.horizon));
    for (double& x : inputs.data()) x = unit(rng);
    for (double& y : targets.data()) y = unit(rng);
    return gradient_check(model, inputs, targets, 1e-5);
}

std::size_t model_storage(const ForecastModel& model) { return model.params.size() * 4; }
std::size_t model_storage(const ModelSpec& spec) { return spec.param_count() * 4; }

}  // namespace apf
