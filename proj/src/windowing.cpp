#include "apf/windowing.hpp"

#include <algorithm>
#include <cmath>

namespace apf {

void WindowOptions::validate() const {
    if (lookback < 1) throw ConfigError("window lookback must be >= 1");
    if (horizon < 1) throw ConfigError("window horizon must be >= 1");
    if (stride < 1) throw ConfigError("window stride must be >= 1");
    if (!(train_fraction > 0.0 && val_fraction >= 0.0 && train_fraction + val_fraction <= 1.0))
        throw ConfigError("split fractions must satisfy train > 0, val >= 0, train + val <= 1");
    if (input_channels != 1 && input_channels != 2) throw ConfigError("input_channels must be 1 or 2");
}

std::vector<std::size_t> WindowedDataset::rows(Split which) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == which) out.push_back(i);
    return out;
}

std::size_t window_count(std::size_t n, const WindowOptions& options) {
    const auto need = static_cast<std::size_t>(options.lookback + options.horizon);
    if (n < need) return 0;
    return (n - need) / static_cast<std::size_t>(options.stride) + 1;
}

WindowedDataset window_series(const std::vector<LoadSeries>& series, const WindowOptions& options) {
    options.validate();
    const auto P = static_cast<std::size_t>(options.lookback);
    const auto h = static_cast<std::size_t>(options.horizon);
    const auto stride = static_cast<std::size_t>(options.stride);
    const auto channels = static_cast<std::size_t>(options.input_channels);

    WindowedDataset ds;
    ds.lookback = options.lookback;
    ds.horizon = options.horizon;
    ds.input_channels = options.input_channels;
    ds.series_ids.reserve(series.size());
    ds.load_norm.resize(series.size());
    ds.users_norm.resize(series.size());

    std::size_t total = 0;
    for (const auto& s : series) total += window_count(s.size(), options);
    ds.inputs = Matrix(total, P * channels);
    ds.targets = Matrix(total, h);
    ds.series.reserve(total);
    ds.start.reserve(total);
    ds.split.reserve(total);

    const double test_fraction = std::max(0.0, 1.0 - options.train_fraction - options.val_fraction);
    std::size_t row = 0;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const LoadSeries& s = series[si];
        ds.series_ids.push_back(s.ap_id);
        const std::size_t m = window_count(s.size(), options);
        if (m == 0) {
            ds.warnings.push_back("series '" + s.ap_id + "' has " + std::to_string(s.size()) +
                                  " windows, fewer than lookback + horizon; skipped");
            continue;
        }
        if (channels == 2 && s.active_users.size() != s.size())
            throw InvalidInput("series '" + s.ap_id + "' lacks active_users for a 2-channel dataset");

        const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(m) * test_fraction + 1e-9));
        const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(m) * options.val_fraction + 1e-9));
        const std::size_t n_train = m - n_val - n_test;

        // Normalisers see only values covered by training windows.
        const std::size_t covered = (n_train - 1) * stride + P + h;
        const auto lo = s.load.begin();
        const auto [mn, mx] = std::minmax_element(lo, lo + static_cast<std::ptrdiff_t>(covered));
        ds.load_norm[si] = {*mn, *mx};
        if (channels == 2) {
            const auto ub = s.active_users.begin();
            const auto [umn, umx] = std::minmax_element(ub, ub + static_cast<std::ptrdiff_t>(covered));
            ds.users_norm[si] = {*umn, *umx};
        }

        for (std::size_t w = 0; w < m; ++w, ++row) {
            const std::size_t t0 = w * stride;
            auto in = ds.inputs.row(row);
            for (std::size_t p = 0; p < P; ++p) {
                in[p * channels] = ds.load_norm[si].normalize(s.load[t0 + p]);
                if (channels == 2) in[p * channels + 1] = ds.users_norm[si].normalize(s.active_users[t0 + p]);
            }
            auto out = ds.targets.row(row);
            for (std::size_t k = 0; k < h; ++k) out[k] = ds.load_norm[si].normalize(s.load[t0 + P + k]);
            ds.series.push_back(si);
            ds.start.push_back(t0);
            ds.split.push_back(w < n_train ? Split::Train : (w < n_train + n_val ? Split::Val : Split::Test));
        }
    }
    return ds;
}

}  // namespace apf
