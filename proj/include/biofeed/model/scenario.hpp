#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "biofeed/model/moisture.hpp"

namespace biofeed {

enum class SequenceStrategy { ShortPattern, LongBlocks, Random, Explicit };
enum class SequenceOrder { HighStart, LowStart };
enum class StageSchemeKind { PerBale, Combined, Detailed };

struct StageScheme {
    StageSchemeKind kind = StageSchemeKind::PerBale;
    /// Stages per bale under Detailed.
    int parts = 3;
};

enum class InitialInventoryKind { Empty, HalfFull, Full, Explicit };

struct InitialInventory {
    InitialInventoryKind kind = InitialInventoryKind::Empty;
    /// Used only by Explicit.
    double dt = 0.0;
};

/// How the target rate enters the shortfall row.
enum class RateNormalization {
    /// Demand per stage = r * stage duration (hours).
    StageDuration,
    /// Demand per stage = r * beta, treating r as dt per unit-weight stage.
    PerStage,
};

struct ScenarioConfig {
    int horizon_bales = 50;
    PerLevel<double> mix{{0.6, 0.2, 0.2}};
    SequenceStrategy sequence_strategy = SequenceStrategy::ShortPattern;
    SequenceOrder sequence_order = SequenceOrder::HighStart;
    std::vector<MoistureLevel> explicit_sequence;
    StageScheme stage_scheme;
    double target_rate = 2.95;
    double holding_cost = 1.0;
    double penalty_cost = 20.0;
    InitialInventory initial_inventory;
    double bale_dry_mass = 0.45;
    RateNormalization rate_normalization = RateNormalization::StageDuration;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
};

struct StageInfo {
    MoistureLevel level;
    double beta;
    /// Index of the first bale covered by the stage.
    int first_bale;
    /// Number of bales (Combined) or 1 (PerBale, Detailed) the stage draws from.
    int bales;
};

struct StagePlan {
    std::vector<StageInfo> stages;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(stages.size()); }
    [[nodiscard]] const StageInfo& operator[](int t) const { return stages.at(static_cast<std::size_t>(t)); }
    [[nodiscard]] double total_weight() const noexcept;
};

[[nodiscard]] std::string_view to_string(SequenceStrategy s) noexcept;
[[nodiscard]] std::string_view to_string(SequenceOrder o) noexcept;
[[nodiscard]] std::string_view to_string(StageSchemeKind k) noexcept;
[[nodiscard]] std::string_view to_string(InitialInventoryKind k) noexcept;
[[nodiscard]] SequenceStrategy parse_sequence_strategy(std::string_view s);
[[nodiscard]] SequenceOrder parse_sequence_order(std::string_view s);
[[nodiscard]] StageSchemeKind parse_stage_scheme(std::string_view s);
[[nodiscard]] InitialInventoryKind parse_initial_inventory(std::string_view s);

/// Smallest bale count realizing the mix as integer level counts; throws when
/// no pattern up to 10000 bales exists.
[[nodiscard]] int smallest_pattern_length(const PerLevel<double>& mix);

/// Bale moisture sequence of length horizon_bales. Random draws without
/// replacement from the exact level multiset.
[[nodiscard]] std::vector<MoistureLevel> generate_sequence(const ScenarioConfig& config, std::mt19937_64& rng);

/// Throws std::invalid_argument for an empty sequence or Detailed parts <= 0.
[[nodiscard]] StagePlan build_stage_plan(const std::vector<MoistureLevel>& sequence, const StageScheme& scheme);

}  // namespace biofeed
