#include "apf/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "apf/core.hpp"

namespace apf {

void validate(const SyntheticConfig& config) {
    if (config.archetypes.empty()) throw ConfigError("synthetic config lists no archetypes");
    if (config.days <= 0) throw ConfigError("synthetic days must be positive");
    if (config.step_w <= 0 || 86400 % config.step_w != 0)
        throw ConfigError("synthetic step_w must be a positive divisor of one day");
    for (const auto& a : config.archetypes) {
        const std::string who = "archetype '" + a.name + "': ";
        if (a.count <= 0) throw ConfigError(who + "count must be positive");
        if (a.base_level < 0.0) throw ConfigError(who + "base_level must be non-negative");
        if (a.diurnal_amplitude < 0.0) throw ConfigError(who + "diurnal_amplitude must be non-negative");
        if (a.weekend_contrast < 0.0 || a.weekend_contrast > 1.0)
            throw ConfigError(who + "weekend_contrast must lie in [0, 1]");
        if (a.noise_scale < 0.0) throw ConfigError(who + "noise_scale must be non-negative");
        if (a.noise_ar < 0.0 || a.noise_ar >= 1.0) throw ConfigError(who + "noise_ar must lie in [0, 1)");
        if (a.bytes_per_user <= 0.0) throw ConfigError(who + "bytes_per_user must be positive");
    }
}

namespace {

double diurnal_bump(double hour, double peak_hour) {
    const double c = std::cos(2.0 * std::numbers::pi * (hour - peak_hour) / 24.0);
    const double b = 0.5 * (1.0 + c);
    return b * b;
}

bool is_weekend(Timestamp t) {
    // 1970-01-01 was a Thursday; index 0 = Monday
    const auto days = static_cast<long long>(std::floor(static_cast<double>(t) / 86400.0));
    const long long dow = ((days % 7) + 7 + 3) % 7;
    return dow >= 5;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    validate(config);
    SyntheticDataset out;
    const auto n = static_cast<std::size_t>(config.days) * static_cast<std::size_t>(86400 / config.step_w);

    for (std::size_t a = 0; a < config.archetypes.size(); ++a) {
        const Archetype& arch = config.archetypes[a];
        out.archetype_names.push_back(arch.name);
        for (int j = 0; j < arch.count; ++j) {
            std::mt19937_64 rng(derive_seed(seed, a, static_cast<std::uint64_t>(j)));
            std::normal_distribution<double> gauss(0.0, 1.0);

            LoadSeries s;
            char id[16];
            std::snprintf(id, sizeof id, "%03d", j);
            s.ap_id = arch.name + "-" + id;
            s.origin = config.origin;
            s.step_w = config.step_w;
            s.load.resize(n);
            s.active_users.resize(n);

            const double sigma = arch.noise_scale * arch.base_level;
            const double innovation = std::sqrt(1.0 - arch.noise_ar * arch.noise_ar);
            double e = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Timestamp t = s.window_start(i);
                const double hour = static_cast<double>(((t % 86400) + 86400) % 86400) / 3600.0;
                const double amp = is_weekend(t) ? arch.diurnal_amplitude * (1.0 - arch.weekend_contrast)
                                                 : arch.diurnal_amplitude;
                double x = arch.base_level * (1.0 + amp * diurnal_bump(hour, arch.peak_hour));
                if (sigma > 0.0) {
                    const double z = gauss(rng);
                    e = i == 0 ? z : arch.noise_ar * e + innovation * z;
                    x += sigma * e;
                }
                x = std::max(0.0, x);
                s.load[i] = x;
                s.active_users[i] = std::round(x / arch.bytes_per_user);
            }
            out.series.push_back(std::move(s));
            out.labels.push_back(static_cast<int>(a));
        }
    }
    return out;
}

SyntheticConfig default_synthetic_config() {
    SyntheticConfig c;
    c.days = 14;
    c.step_w = 600;
    c.archetypes = {
        {"busy", 8, 4.0e6, 3.0, 0.9, 0.15, 0.6, 13.0, 8.0e4},
        {"evening", 8, 6.0e5, 2.0, 0.1, 0.15, 0.6, 21.0, 5.0e4},
        {"idle", 8, 2.0e4, 0.5, 0.5, 0.3, 0.3, 12.0, 2.0e4},
    };
    return c;
}

}  // namespace apf
