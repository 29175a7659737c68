#pragma once

#include <vector>

#include "biofeed/config/instance.hpp"
#include "biofeed/model/moisture.hpp"
#include "biofeed/model/network.hpp"
#include "biofeed/model/scenario.hpp"
#include "biofeed/physics/physics.hpp"

namespace biofeed {

/// Problem data of one stage at one moisture draw.
struct StageRealization {
    int stage = 0;
    MoistureLevel level = MoistureLevel::Low;
    double moisture = 0.0;
    /// Moisture entering the secondary grinder and the bin.
    double downstream_moisture = 0.0;
    double beta = 1.0;
    double duration_hours = 0.0;
    /// Dry tons available from the bales of this stage.
    double supply = 0.0;
    /// Dry tons the reactor should receive during the stage.
    double demand = 0.0;
    double bypass_fraction = 0.0;
    /// Per node: dt per speed unit over the stage, speed bound, infeed cap (dt
    /// over the stage, +inf when absent), dry-matter retention.
    std::vector<double> flow_per_speed;
    std::vector<double> speed_bound;
    std::vector<double> infeed_cap;
    std::vector<double> retention;
    /// Per storage node, dt.
    std::vector<double> capacity;
};

/// Everything needed to instantiate stage problems: network, material model,
/// scenario and the stage plan derived from its bale sequence.
class StageModel {
public:
    StageModel(NetworkSpec network, Physics physics, MoistureModel moisture, ScenarioConfig scenario,
               StagePlan plan);

    /// Builds the bale sequence from the scenario (seeded by scenario.seed) and its stage plan.
    [[nodiscard]] static StageModel from_instance(const Instance& instance);

    [[nodiscard]] const NetworkSpec& network() const noexcept { return network_; }
    [[nodiscard]] const Physics& physics() const noexcept { return physics_; }
    [[nodiscard]] const MoistureModel& moisture() const noexcept { return moisture_; }
    [[nodiscard]] const ScenarioConfig& scenario() const noexcept { return scenario_; }
    [[nodiscard]] const StagePlan& plan() const noexcept { return plan_; }
    [[nodiscard]] int num_stages() const noexcept { return plan_.size(); }
    [[nodiscard]] int num_states() const noexcept { return network_.num_storage(); }

    /// Throws std::invalid_argument when m lies outside the stage level's range.
    [[nodiscard]] StageRealization realize(int stage, double m) const;
    /// Realization at the level's mean moisture.
    [[nodiscard]] StageRealization realize_mean(int stage) const;

    /// Inventory entering stage 0, sized from stage 0 at mean moisture.
    [[nodiscard]] std::vector<double> initial_state() const;

    /// Copy with a different plan; used for truncated horizons.
    [[nodiscard]] StageModel with_plan(StagePlan plan) const;

private:
    NetworkSpec network_;
    Physics physics_;
    MoistureModel moisture_;
    ScenarioConfig scenario_;
    StagePlan plan_;
};

}  // namespace biofeed
