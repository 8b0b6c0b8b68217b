// apf: command-line driver for the clustering and selective-forecasting pipeline.
//
// Exit codes: 0 success, 2 config error, 3 missing dependency, 4 runtime failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "apf/config.hpp"
#include "apf/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDependency = 3;
constexpr int kExitRuntime = 4;

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> horizon;
    std::optional<int> jobs;
};

apf::PipelineConfig resolve(const GlobalFlags& flags) {
    apf::PipelineConfig config = flags.config_path.empty() ? apf::load_config(apf::TomlDocument::parse(""))
                                                           : apf::load_config_file(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    if (flags.jobs) config.jobs = *flags.jobs;
    if (flags.horizon) {
        bool known = false;
        for (int h : config.horizons_min) known = known || h == *flags.horizon;
        if (!known) throw apf::ConfigError("--horizon " + std::to_string(*flags.horizon) + " is not among the configured horizons");
        config.horizons_min = {*flags.horizon};
        const auto it = config.train_by_horizon.find(*flags.horizon);
        std::map<int, apf::TrainConfig> kept;
        if (it != config.train_by_horizon.end()) kept.insert(*it);
        config.train_by_horizon = kept;
    }
    config.validate();
    return config;
}

void log_line(const std::string& line) { std::cerr << line << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-AP load clustering, cluster-specific LSTM forecasting and deployment planning"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "TOML configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "Root seed for every stochastic stage");
    app.add_option("--out", flags.out_dir, "Output directory");
    app.add_option("--horizon", flags.horizon, "Restrict train/evaluate/plan/report to one horizon (minutes)")
        ->check(CLI::IsMember({10, 60}));
    app.add_option("--jobs", flags.jobs, "Parallel training tasks")->check(CLI::PositiveNumber);

    std::string chosen;
    for (apf::Stage s : apf::kAllStages) {
        const std::string name(apf::to_string(s));
        app.add_subcommand(name, "Run the " + name + " stage")->callback([&chosen, name] { chosen = name; });
    }
    app.add_subcommand("all", "Run every stage in order")->callback([&chosen] { chosen = "all"; });
    app.add_subcommand("synth", "Write a synthetic association-record CSV and its labels")->callback([&chosen] {
        chosen = "synth";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const apf::PipelineConfig config = resolve(flags);
        if (chosen == "synth") {
            for (const auto& a : apf::write_synthetic_records(config, log_line)) std::cout << config.out_dir << "/" << a << '\n';
        } else if (chosen == "all") {
            for (const auto& r : apf::run_all(config, log_line))
                for (const auto& a : r.artifacts) std::cout << config.out_dir << "/" << a << '\n';
        } else {
            for (const auto& a : apf::run_stage(apf::parse_stage(chosen), config, log_line).artifacts)
                std::cout << config.out_dir << "/" << a << '\n';
        }
    } catch (const apf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const apf::DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << '\n';
        return kExitDependency;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
