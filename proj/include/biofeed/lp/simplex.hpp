#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "biofeed/lp/linear_program.hpp"

namespace biofeed::lp {

enum class Status { Optimal, Infeasible, Unbounded };

[[nodiscard]] std::string to_string(Status status);

struct LpSolution {
    Status status = Status::Infeasible;
    std::vector<double> primal;
    double objective = 0.0;
    /// d(objective)/d(rhs) per row; nonpositive on <= rows, nonnegative on >= rows.
    std::vector<double> duals;
    std::vector<double> reduced_costs;
    int iterations = 0;

    [[nodiscard]] bool optimal() const noexcept { return status == Status::Optimal; }
};

struct SolverOptions {
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-7;
    double pivot_tol = 1e-9;
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    int bland_after = 50;
    /// 0 selects a size-dependent cap.
    int max_iterations = 0;
};

/// Raised when the basis becomes numerically singular or the refactored
/// solution fails its feasibility checks; carries row diagnostics.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Fixing {
    int var;
    double value;
};

/// Dense two-phase bounded-variable primal simplex.
///
/// Dantzig pricing with lowest-index ties, Bland's rule after a run of
/// degenerate pivots. The final basis is refactored from the original data
/// so that primal values and duals do not carry tableau drift.
[[nodiscard]] LpSolution solve(const LinearProgram& lp, const SolverOptions& options = {});

/// Solves `lp` with the listed variables pinned to the given values.
/// Throws std::invalid_argument when a value lies outside the variable's bounds.
[[nodiscard]] LpSolution solve_with_fixed(const LinearProgram& lp, std::span<const Fixing> fixings,
                                          const SolverOptions& options = {});

}  // namespace biofeed::lp
