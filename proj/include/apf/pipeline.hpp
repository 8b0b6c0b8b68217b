#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "apf/config.hpp"

namespace apf {

enum class Stage { Ingest, Features, Reduce, Cluster, Train, Evaluate, Plan, Report };

inline constexpr Stage kAllStages[] = {Stage::Ingest, Stage::Features, Stage::Reduce,   Stage::Cluster,
                                       Stage::Train,  Stage::Evaluate, Stage::Plan, Stage::Report};

std::string_view to_string(Stage stage);
/// Throws ConfigError on an unknown name.
Stage parse_stage(std::string_view name);

using LogFn = std::function<void(const std::string&)>;

struct StageResult {
    Stage stage = Stage::Ingest;
    std::vector<std::string> artifacts;  // paths relative to out_dir
};

/// Runs one stage against config.out_dir and records it in manifest.json.
/// Throws DependencyError naming the missing upstream artifact.
StageResult run_stage(Stage stage, const PipelineConfig& config, const LogFn& log = {});

/// All stages in order.
std::vector<StageResult> run_all(const PipelineConfig& config, const LogFn& log = {});

/// Writes an association-record CSV and a label file for the synthetic
/// population to out_dir. Each client's presence run becomes one session.
std::vector<std::string> write_synthetic_records(const PipelineConfig& config, const LogFn& log = {});

/// Seed for one stochastic task; every stage derives its seeds from config.seed this way.
std::uint64_t task_seed(const PipelineConfig& config, std::string_view stage, std::uint64_t task);

}  // namespace apf
