#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "biofeed/model/moisture.hpp"
#include "biofeed/model/network.hpp"
#include "biofeed/model/scenario.hpp"
#include "biofeed/physics/physics.hpp"

namespace biofeed {

/// Solver and sampling settings carried by a config file; command-line flags override them.
struct RunSettings {
    int realizations = 100;
    int forward_paths = 1;
    double alpha = 0.025;
    double stall_eps = 1e-4;
    int stall_window = 50;
    int max_iters = 2000;
    /// Stop when UB - LB <= gap_tol; 0 disables the check.
    double gap_tol = 0.0;
    int two_stage_paths = 1000;
    int validation_paths = 500;
    /// Added to the scenario seed for validation paths so they never share a stream with training.
    std::uint64_t validation_seed_offset = 1000003;

    friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

struct Instance {
    NetworkSpec network;
    MoistureModel moisture;
    PhysicsTables physics;
    ScenarioConfig scenario;
    RunSettings run;
};

/// Reference preprocessing line with the shipped calibration.
[[nodiscard]] NetworkSpec default_network();
[[nodiscard]] Instance default_instance();

/// Parse or validation failure; the message carries the line number when known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line);
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// Missing sections fall back to defaults; unknown keys are rejected.
[[nodiscard]] Instance parse_instance(const std::string& yaml_text);
[[nodiscard]] Instance load_instance(const std::filesystem::path& path);

/// Canonical YAML; parse_instance(to_yaml(x)) reproduces x exactly.
[[nodiscard]] std::string to_yaml(const Instance& instance);

/// Format a double with the shortest text that reads back bit-identically.
[[nodiscard]] std::string format_double(double v);

}  // namespace biofeed
