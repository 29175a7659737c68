#include "biofeed/stage/stage_model.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

#include "biofeed/lp/linear_program.hpp"

namespace biofeed {

StageModel::StageModel(NetworkSpec network, Physics physics, MoistureModel moisture, ScenarioConfig scenario,
                       StagePlan plan)
    : network_(std::move(network)),
      physics_(std::move(physics)),
      moisture_(std::move(moisture)),
      scenario_(std::move(scenario)),
      plan_(std::move(plan)) {
    scenario_.validate();
    if (plan_.size() == 0) throw std::invalid_argument("stage plan is empty");
}

StageModel StageModel::from_instance(const Instance& instance) {
    std::mt19937_64 rng(instance.scenario.seed);
    const auto sequence = generate_sequence(instance.scenario, rng);
    return StageModel(instance.network, Physics(instance.physics), instance.moisture, instance.scenario,
                      build_stage_plan(sequence, instance.scenario.stage_scheme));
}

StageModel StageModel::with_plan(StagePlan plan) const {
    return StageModel(network_, physics_, moisture_, scenario_, std::move(plan));
}

StageRealization StageModel::realize(int stage, double m) const {
    const auto& info = plan_[stage];
    const auto& range = moisture_.range(info.level);
    if (!range.contains(m)) {
        std::ostringstream os;
        os << "stage " << stage << ": moisture " << m << " outside the " << to_string(info.level) << " range ["
           << range.lo << ", " << range.hi << "]";
        throw std::invalid_argument(os.str());
    }
    const auto level = info.level;
    StageRealization r;
    r.stage = stage;
    r.level = level;
    r.moisture = m;
    r.beta = info.beta;
    const int g1 = network_.primary_grinder();
    r.downstream_moisture = g1 >= 0 ? physics_.apply_losses(1.0, m, network_.node(g1).id, level).moisture : m;
    const double feed = (*network_.node(network_.source()).system_feed_rate)[level];
    r.duration_hours = info.beta * scenario_.bale_dry_mass / feed;
    r.supply = info.beta * scenario_.bale_dry_mass;
    r.demand = scenario_.rate_normalization == RateNormalization::StageDuration
                   ? scenario_.target_rate * r.duration_hours
                   : scenario_.target_rate * info.beta;
    r.bypass_fraction = physics_.tables().bypass[level];

    const int n = network_.num_nodes();
    r.flow_per_speed.resize(static_cast<std::size_t>(n));
    r.speed_bound.resize(static_cast<std::size_t>(n));
    r.infeed_cap.resize(static_cast<std::size_t>(n));
    r.retention.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& e = network_.node(i);
        const auto k = static_cast<std::size_t>(i);
        const double mi = e.density == DensityContext::Grinder2 ? r.downstream_moisture : m;
        r.flow_per_speed[k] = e.kind == EquipmentKind::Storage ? 0.0 : physics_.flow_coefficient(e, mi, level) * r.duration_hours;
        r.speed_bound[k] = e.speed_bounds[level];
        r.infeed_cap[k] = e.infeed_limit ? (*e.infeed_limit)[level] * r.duration_hours : lp::kInfinity;
        r.retention[k] = physics_.retention(e.id, level);
    }
    for (int s : network_.storage_nodes()) {
        r.capacity.push_back(physics_.storage_capacity(network_.node(s).storage_volume, r.downstream_moisture, level));
    }
    return r;
}

StageRealization StageModel::realize_mean(int stage) const { return realize(stage, moisture_.mean(plan_[stage].level)); }

std::vector<double> StageModel::initial_state() const {
    const auto r0 = realize_mean(0);
    std::vector<double> x(r0.capacity.size(), 0.0);
    const auto& init = scenario_.initial_inventory;
    for (std::size_t k = 0; k < x.size(); ++k) {
        switch (init.kind) {
            case InitialInventoryKind::Empty: x[k] = 0.0; break;
            case InitialInventoryKind::HalfFull: x[k] = 0.5 * r0.capacity[k]; break;
            case InitialInventoryKind::Full: x[k] = r0.capacity[k]; break;
            case InitialInventoryKind::Explicit: x[k] = init.dt; break;
        }
    }
    return x;
}

}  // namespace biofeed
