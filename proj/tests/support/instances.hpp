#pragma once

#include <vector>

#include "biofeed/config/instance.hpp"
#include "biofeed/stage/stage_model.hpp"

namespace biofeed::testing {

/// Reference line with an explicit bale sequence.
inline StageModel reference_model(const std::vector<MoistureLevel>& sequence, double target_rate = 2.95,
                                  StageScheme scheme = {}) {
    Instance inst = default_instance();
    inst.scenario.sequence_strategy = SequenceStrategy::Explicit;
    inst.scenario.horizon_bales = static_cast<int>(sequence.size());
    inst.scenario.explicit_sequence = sequence;
    inst.scenario.target_rate = target_rate;
    inst.scenario.stage_scheme = scheme;
    return StageModel::from_instance(inst);
}

/// Conveyor -> bin -> conveyor with unit stage duration and dry-baseline
/// conveyors: each speed unit moves 0.2238 dt per stage.
inline StageModel toy_model(const std::vector<MoistureLevel>& sequence, double in_speed, double out_speed,
                            double volume = 10.0, double target_rate = 0.5) {
    EquipmentSpec in;
    in.id = "in";
    in.kind = EquipmentKind::Transport;
    in.geometry = 1.0;
    in.speed_bounds = PerLevel<double>{{in_speed, in_speed, in_speed}};
    in.system_feed_rate = PerLevel<double>{{1.0, 1.0, 1.0}};
    EquipmentSpec bin;
    bin.id = "bin";
    bin.kind = EquipmentKind::Storage;
    bin.storage_volume = volume;
    EquipmentSpec out;
    out.id = "out";
    out.kind = EquipmentKind::Transport;
    out.geometry = 1.0;
    out.speed_bounds = PerLevel<double>{{out_speed, out_speed, out_speed}};
    NetworkSpec net({in, bin, out}, {{"in", "bin"}, {"bin", "out"}}, "out");
    ScenarioConfig sc;
    sc.sequence_strategy = SequenceStrategy::Explicit;
    sc.horizon_bales = static_cast<int>(sequence.size());
    sc.explicit_sequence = sequence;
    sc.bale_dry_mass = 1.0;
    sc.target_rate = target_rate;
    return StageModel(net, Physics(), MoistureModel(), sc, build_stage_plan(sequence, {}));
}

}  // namespace biofeed::testing
