#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "biofeed/baselines/baselines.hpp"
#include "biofeed/sddp/sddp.hpp"
#include "biofeed/stage/stage_model.hpp"

namespace biofeed {

/// Validation paths: same level distributions as training, drawn from
/// seed + seed_offset so they never coincide with training samples.
[[nodiscard]] std::vector<std::vector<double>> validation_paths(const StageModel& model, int count,
                                                                std::uint64_t seed,
                                                                std::uint64_t seed_offset = 1000003);

struct PathRecord {
    bool feasible = true;
    double cost = 0.0;
    /// Per stage: total inventory, shortfall, delivered dt, demand dt.
    std::vector<double> inventory;
    std::vector<double> shortfall;
    std::vector<double> delivered;
    std::vector<double> demand;
};

struct EvaluationReport {
    std::string model;
    std::vector<PathRecord> paths;
    int infeasible = 0;
    /// Over feasible paths; the interval is two-sided at 95%.
    double mean = 0.0;
    double stddev = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    /// Per-stage means over feasible paths.
    std::vector<double> mean_inventory;
    std::vector<double> mean_shortfall;
    std::vector<double> rate_attainment;

    [[nodiscard]] int feasible() const noexcept { return static_cast<int>(paths.size()) - infeasible; }
};

/// Aggregates path records into the report statistics.
[[nodiscard]] EvaluationReport summarize(std::string model, std::vector<PathRecord> paths);

/// Rolls the trained cuts forward along each path. A path whose stage
/// problem has no solution is flagged and left out of the statistics.
[[nodiscard]] EvaluationReport simulate_policy(const StageModel& model, const Policy& policy,
                                               const std::vector<std::vector<double>>& paths, int workers = 1,
                                               std::string label = "multi-stage");

/// Solves each stage with the outgoing inventory pinned to the plan.
[[nodiscard]] EvaluationReport simulate_static_plan(const StageModel& model, const StaticPlan& plan,
                                                    const std::vector<std::vector<double>>& paths, int workers = 1,
                                                    std::string label = {});

/// Replays a k-stage policy over the full horizon of `model`, carrying
/// inventory across repeats; stage t uses pool t mod k and every repeat ends
/// as a horizon. Throws std::invalid_argument when k does not divide the
/// horizon or the policy's bale levels do not repeat along the plan.
[[nodiscard]] EvaluationReport truncate_and_repeat(const StageModel& model, const Policy& policy,
                                                   const std::vector<std::vector<double>>& paths, int workers = 1,
                                                   std::string label = "truncate-and-repeat");

struct GapRow {
    std::string model;
    double mean = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    /// Percent of the reference midpoint, or an absolute difference when
    /// the reference midpoint is zero.
    double gap = 0.0;
    bool absolute = false;
    int infeasible = 0;
};

/// Gaps of CI midpoints against the reference. Reports must share paths.
[[nodiscard]] std::vector<GapRow> compare(const std::vector<EvaluationReport>& reports,
                                          const EvaluationReport& reference);

struct PairedDifference {
    double mean = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    int pairs = 0;
};

/// Mean of a - b over paths feasible in both, with a two-sided 95% interval.
[[nodiscard]] PairedDifference paired_difference(const EvaluationReport& a, const EvaluationReport& b);

/// Header line written first in every artifact.
[[nodiscard]] std::string artifact_header(const std::string& fingerprint, std::uint64_t seed);

/// RFC-4180 field quoting.
[[nodiscard]] std::string csv_field(const std::string& text);

/// One row per gap row: model, mean, ci_lower, ci_upper, gap, gap_kind, infeasible.
void write_summary_csv(std::ostream& out, const std::vector<GapRow>& rows, const std::string& fingerprint,
                       std::uint64_t seed);

/// Long format: model, stage, statistic, value.
void write_trajectory_csv(std::ostream& out, const std::vector<EvaluationReport>& reports,
                          const std::string& fingerprint, std::uint64_t seed);

}  // namespace biofeed
