#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "biofeed/baselines/baselines.hpp"
#include "biofeed/config/instance.hpp"
#include "biofeed/eval/eval.hpp"
#include "biofeed/sddp/sddp.hpp"

namespace biofeed {

enum class Command { Train, Evaluate, Compare, Sweep };

/// Process exit statuses; each failure class has its own code.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,
    kExitConfig = 3,
    kExitInfeasible = 4,
    kExitIo = 5,
    kExitFingerprint = 6,
};

/// Overrides of the config file's solver settings.
struct Overrides {
    std::optional<int> realizations;
    std::optional<int> two_stage_paths;
    std::optional<int> validation_paths;
    std::optional<int> max_iters;
    std::optional<double> stall_eps;
    std::optional<int> stall_window;

    void apply(RunSettings& run) const;
};

struct SweepAxis {
    std::string name;
    std::vector<std::string> values;
};

struct ExperimentSpec {
    Command command = Command::Compare;
    /// Empty selects the built-in base case.
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::uint64_t seed = 1;
    int workers = 1;
    Overrides overrides;
    /// evaluate: a trained policy, or a static plan.
    std::filesystem::path policy;
    std::filesystem::path plan;
    /// sweep: axes combined as a full grid.
    std::vector<SweepAxis> axes;
};

/// Names accepted as sweep axes.
[[nodiscard]] const std::vector<std::string>& sweep_axis_names();

/// Sets one axis value on an instance. Throws ConfigError on a bad name or value.
void apply_axis(Instance& instance, const std::string& axis, const std::string& value);

/// Hash of the effective instance, solver settings included.
[[nodiscard]] std::string experiment_fingerprint(const Instance& instance);

struct ModelRun {
    EvaluationReport report;
    double seconds = 0.0;
};

struct Comparison {
    std::string fingerprint;
    TrainResult multi_stage;
    StaticSolution two_stage;
    StaticSolution mean_value;
    /// Multi-stage, two-stage, mean-value, evaluated on shared paths.
    std::vector<ModelRun> runs;
    std::vector<GapRow> gaps;
};

/// Trains the multi-stage policy, solves both static baselines and evaluates
/// all three on the same validation paths.
[[nodiscard]] Comparison run_comparison(const Instance& instance, std::uint64_t seed, int workers);

/// Executes a command, writing artifacts under spec.out and progress to the
/// log. Returns an ExitCode.
int run(const ExperimentSpec& spec);

}  // namespace biofeed
