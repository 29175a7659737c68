#pragma once

#include <span>
#include <vector>

#include "biofeed/lp/linear_program.hpp"
#include "biofeed/lp/simplex.hpp"
#include "biofeed/stage/cuts.hpp"
#include "biofeed/stage/stage_model.hpp"

namespace biofeed {

/// How a stage block connects to the inventory around it.
struct BlockLinks {
    /// Incoming inventory as constants on the balance rhs (used when prev_var is empty).
    std::vector<double> prev_value;
    /// Variables holding the incoming inventory, e.g. the parent node in a tree.
    std::vector<int> prev_var;
    /// Existing variables to use as this stage's inventory; empty creates new ones.
    std::vector<int> state_var;
};

/// Indices of one stage block inside a larger LP.
struct BlockLayout {
    std::vector<int> speed;       ///< per node, -1 for storage
    std::vector<int> throughput;  ///< per node, -1 for storage
    std::vector<int> arc_flow;    ///< per arc
    std::vector<int> state;       ///< per storage node
    int shortfall = -1;
    std::vector<int> balance_rows;  ///< per storage node; rhs carries the incoming inventory
    int shortfall_row = -1;
};

/// Appends the variables and rows of one stage. `weight` multiplies the
/// stage cost (probability in trees); holding cost is charged only when
/// `charge_holding` is set. The compact form drops the speed variables and
/// their rows, bounding throughput by coefficient * speed bound instead.
BlockLayout append_stage_block(lp::LinearProgram& lp, const StageModel& model, const StageRealization& real,
                               const BlockLinks& links, double weight, bool charge_holding = true,
                               bool named = false, bool compact = false);

struct StageLp {
    lp::LinearProgram lp;
    BlockLayout layout;
    /// Cost-to-go variable.
    int theta = -1;
    /// First cut row; cut k sits at row first_cut_row + k.
    int first_cut_row = -1;
};

/// Stage problem with incoming inventory on the balance rhs, theta >= 0 and
/// one row per cut; theta is fixed at 0 on the terminal stage.
[[nodiscard]] StageLp build_stage_lp(const StageModel& model, const StageRealization& real,
                                     std::span<const double> prev_state, std::span<const Cut> cuts, bool terminal,
                                     bool named = false);

/// Inventory leaving the stage, clipped to [0, capacity]. Throws on a non-optimal solution.
[[nodiscard]] std::vector<double> extract_state(const lp::LpSolution& sol, const StageLp& stage,
                                                const StageRealization& real);

struct CutIngredients {
    double value = 0.0;
    /// d value / d incoming inventory.
    std::vector<double> gradient;
};

/// Throws on a non-optimal solution.
[[nodiscard]] CutIngredients extract_cut_ingredients(const lp::LpSolution& sol, const StageLp& stage);

struct StageOutcome {
    lp::LpSolution solution;
    std::vector<double> state;
    /// Stage cost excluding the cost-to-go.
    double immediate_cost = 0.0;
    double theta = 0.0;
    double shortfall = 0.0;
    double delivered = 0.0;
    CutIngredients ingredients;
    /// Incoming inventory actually used; differs from the request after a clamp.
    std::vector<double> prev_state;
    bool clamped = false;
};

/// Raised when a stage problem has no solution even after clamping.
class StageInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves the stage, activating cut rows lazily: the LP is solved with a
/// small working set and the most violated cut is added until none is
/// violated. The optimum equals the one with every cut present. When the
/// stage is infeasible at the incoming inventory and that inventory exceeds
/// the stage capacity, it is clamped to capacity and re-solved with a
/// warning. `fixed_state`, when given, pins the outgoing inventory.
[[nodiscard]] StageOutcome solve_stage(const StageModel& model, const StageRealization& real,
                                       std::span<const double> prev_state, std::span<const Cut> cuts, bool terminal,
                                       std::span<const double> fixed_state = {});

}  // namespace biofeed
