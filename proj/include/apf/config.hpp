#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "apf/deploy.hpp"
#include "apf/features.hpp"
#include "apf/ingest.hpp"
#include "apf/lstm.hpp"
#include "apf/synthetic.hpp"
#include "apf/train.hpp"
#include "apf/windowing.hpp"

namespace apf {

/// Minimal TOML reader: `[table]` and `[[array.of.tables]]` headers, `key =
/// value` with strings, integers, floats, booleans and flat arrays, `#`
/// comments. Keys are flattened with dots; the n-th `[[x]]` block becomes
/// `x.<n>.`. Inline tables and multi-line strings are not supported.
class TomlDocument {
public:
    using Scalar = std::variant<bool, std::int64_t, double, std::string>;
    struct Value {
        std::variant<Scalar, std::vector<Scalar>> data;
        std::size_t line = 0;
    };

    /// Throws ConfigError with the line number on a syntax error.
    static TomlDocument parse(const std::string& text);

    const std::map<std::string, Value>& entries() const { return entries_; }
    /// Number of `[[name]]` blocks seen.
    std::size_t array_size(const std::string& name) const;

private:
    std::map<std::string, Value> entries_;
    std::map<std::string, std::size_t> arrays_;
};

enum class Lkv2Mode { Auto, Always, Never };

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "apf_out";
    int jobs = 1;

    // Input: an association CSV, or the synthetic generator when empty.
    std::string input_path;
    ColumnMap columns;
    SyntheticConfig synthetic = default_synthetic_config();

    Seconds step_w = 600;
    Transform transform = Transform::CubeRoot;
    CalendarConfig calendar;

    double variance_target = 0.9;
    int k_min = 2;
    int k_max = 10;
    int kmeans_restarts = 10;
    int kmeans_max_iter = 300;

    // Architectures (layers, hidden) per tier; lookback and channels shared.
    int lookback = 36;
    int input_channels = 1;
    std::map<Tier, std::pair<int, int>> architecture{{Tier::GM, {3, 50}}, {Tier::Lk, {3, 50}}, {Tier::Lkv2, {5, 200}}};
    std::vector<int> horizons_min{10, 60};
    WindowOptions windows;
    TrainConfig train;                         // shared defaults
    std::map<int, TrainConfig> train_by_horizon;  // overrides keyed by minutes
    Lkv2Mode lkv2_mode = Lkv2Mode::Auto;

    DeployPolicy policy;

    /// Train settings for one horizon (override or shared defaults).
    TrainConfig train_for(int horizon_minutes) const;
    /// Horizon in steps; throws ConfigError unless minutes is a multiple of step_w.
    int horizon_steps(int horizon_minutes) const;
    ModelSpec spec_for(Tier tier, int horizon_minutes) const;

    /// Collects every violation into one ConfigError.
    void validate() const;
};

/// Applies a TOML document over the defaults. Unknown keys and type errors
/// are all reported together in one ConfigError.
PipelineConfig load_config(const TomlDocument& doc);
PipelineConfig load_config_file(const std::string& path);

std::string_view to_string(Lkv2Mode mode);

}  // namespace apf
