#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "biofeed/lp/linear_program.hpp"
#include "biofeed/lp/simplex.hpp"
#include "biofeed/sddp/sddp.hpp"
#include "biofeed/stage/stage_model.hpp"

namespace biofeed {

enum class PlanSource { TwoStage, MeanValue };
[[nodiscard]] std::string to_string(PlanSource s);

/// Inventory targets fixed before any moisture is observed.
struct StaticPlan {
    PlanSource source = PlanSource::TwoStage;
    /// [stage][storage node], dt.
    std::vector<std::vector<double>> inventory;

    [[nodiscard]] int num_stages() const noexcept { return static_cast<int>(inventory.size()); }
};

/// Text format: 'biofeed-plan 1', an optional 'fingerprint <hex> seed <n>'
/// line, 'source <two-stage|mean-value>', then one 'stage node dt' line per
/// entry with the storage node id.
void write_static_plan(const StaticPlan& plan, const NetworkSpec& network, std::ostream& out,
                       const std::string& fingerprint = {}, std::uint64_t seed = 0);
/// The fingerprint line, when present, is stored in `fingerprint`.
[[nodiscard]] StaticPlan read_static_plan(std::istream& in, const NetworkSpec& network,
                                          std::string* fingerprint = nullptr);

/// LP whose first-stage variables are the inventories of every stage.
struct ExtensiveForm {
    lp::LinearProgram lp;
    /// [stage][storage node] variable index.
    std::vector<std::vector<int>> inventory;
    int blocks = 0;
};

/// Moisture paths for the two-stage sample: stage 0 at its level mean,
/// later stages drawn independently from their level ranges.
[[nodiscard]] std::vector<std::vector<double>> sample_moisture_paths(const StageModel& model, int count,
                                                                     std::uint64_t seed, std::uint64_t stream);

/// Monolithic extensive form over equally weighted paths: shared inventories,
/// per-path flows and shortfalls, holding charged once on the shared variables.
[[nodiscard]] ExtensiveForm build_two_stage(const StageModel& model, const std::vector<std::vector<double>>& paths);

/// The single-path problem at each stage's mean moisture.
[[nodiscard]] ExtensiveForm build_mean_value(const StageModel& model);

/// Throws std::invalid_argument on a non-optimal solution.
[[nodiscard]] StaticPlan extract_static_plan(const lp::LpSolution& sol, const ExtensiveForm& form, PlanSource source);

/// Raised when no static plan satisfies every sampled path.
class PlanInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TwoStageOptions {
    /// Path-stage blocks up to which the monolithic LP is solved directly.
    int monolithic_blocks = 60;
    /// Relative gap closing the decomposition.
    double tolerance = 1e-7;
    int max_iterations = 1000;
    int workers = 1;
};

struct StaticSolution {
    StaticPlan plan;
    double objective = 0.0;
    int iterations = 0;
    bool decomposed = false;
};

/// Solves the two-stage problem over `paths`. Large samples use an L-shaped
/// decomposition with one aggregated cut per stage per iteration; its
/// subproblems carry an elastic balance penalty so that every trial plan has
/// a finite recourse cost. Throws PlanInfeasible when no plan meets all
/// paths' constraints.
[[nodiscard]] StaticSolution solve_two_stage(const StageModel& model, const std::vector<std::vector<double>>& paths,
                                             PlanSource source = PlanSource::TwoStage,
                                             const TwoStageOptions& options = {});

[[nodiscard]] StaticSolution solve_mean_value(const StageModel& model, const TwoStageOptions& options = {});

class TreeTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DeterministicEquivalent {
    lp::LinearProgram lp;
    std::int64_t nodes = 0;
    /// Inventory variables of the first stage's nodes, [node][storage].
    std::vector<std::vector<int>> root_inventory;
};

/// Scenario-tree LP over the grid from `start_stage` to the horizon: one
/// stage block per tree node weighted by its probability. The first stage's
/// grid values form equally likely roots that share `initial_state` (the
/// model's initial inventory when empty). Refuses trees above `node_cap` nodes.
[[nodiscard]] DeterministicEquivalent build_deterministic_equivalent(const StageModel& model,
                                                                     const RealizationGrid& grid,
                                                                     std::int64_t node_cap = 5000,
                                                                     int start_stage = 0,
                                                                     std::vector<double> initial_state = {});

}  // namespace biofeed
