#pragma once

#include <limits>
#include <string>
#include <vector>

namespace biofeed::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
    int var;
    double coef;
};

struct Row {
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
    std::string name;
};

struct Variable {
    double lower = 0.0;
    double upper = kInfinity;
    double cost = 0.0;
    std::string name;
};

/// Minimization LP over bounded variables with sparse rows.
///
/// Variables and rows are addressed by the dense index returned when they
/// are added. Duplicate variable indices inside one row are summed when the
/// solver densifies the row.
class LinearProgram {
public:
    int add_variable(double lower, double upper, double cost, std::string name = {});
    int add_row(std::vector<Term> terms, Relation relation, double rhs, std::string name = {});

    void set_bounds(int var, double lower, double upper);
    void set_cost(int var, double cost);
    void set_rhs(int row, double rhs);
    void add_term(int row, int var, double coef);

    [[nodiscard]] int num_variables() const noexcept { return static_cast<int>(vars_.size()); }
    [[nodiscard]] int num_rows() const noexcept { return static_cast<int>(rows_.size()); }
    [[nodiscard]] const Variable& variable(int var) const { return vars_.at(var); }
    [[nodiscard]] const Row& row(int r) const { return rows_.at(r); }
    [[nodiscard]] const std::vector<Variable>& variables() const noexcept { return vars_; }
    [[nodiscard]] const std::vector<Row>& rows() const noexcept { return rows_; }

    /// Throws std::invalid_argument on non-finite coefficients, crossed
    /// bounds, or out-of-range variable references.
    void validate() const;

private:
    std::vector<Variable> vars_;
    std::vector<Row> rows_;
};

}  // namespace biofeed::lp
