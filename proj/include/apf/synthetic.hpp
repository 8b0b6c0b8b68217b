#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apf/ingest.hpp"

namespace apf {

/// One behavioural family of APs in a synthetic network.
///
/// Load per window is
///   base * (1 + amp_d * bump(hour)) + noise
/// where bump peaks at peak_hour with value 1 and decays to 0 twelve hours
/// away, amp_d is diurnal_amplitude on weekdays and
/// diurnal_amplitude * (1 - weekend_contrast) on Saturday/Sunday, and noise
/// is Gaussian with standard deviation noise_scale * base (AR(1) with
/// coefficient noise_ar). Negative draws are clipped to 0.
struct Archetype {
    std::string name;
    int count = 0;
    double base_level = 0.0;        // bytes per window
    double diurnal_amplitude = 0.0;
    double weekend_contrast = 0.0;  // 0: weekends like weekdays, 1: no diurnal peak on weekends
    double noise_scale = 0.0;
    double noise_ar = 0.0;          // in [0, 1)
    double peak_hour = 14.0;
    double bytes_per_user = 50'000.0;
};

struct SyntheticConfig {
    std::vector<Archetype> archetypes;
    int days = 14;
    Seconds step_w = 600;
    Timestamp origin = 1546819200;  // Monday 2019-01-07 00:00 UTC
};

struct SyntheticDataset {
    std::vector<LoadSeries> series;
    std::vector<int> labels;  // archetype index per series
    std::vector<std::string> archetype_names;
};

/// Throws ConfigError on non-positive counts, days or step, or negative levels.
void validate(const SyntheticConfig& config);

/// Deterministic for a fixed (config, seed). AP ids are "<name>-<nnn>".
SyntheticDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Three well-separated families: busy weekday-heavy, evening residential, idle.
SyntheticConfig default_synthetic_config();

}  // namespace apf
