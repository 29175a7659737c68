#include "biofeed/lp/linear_program.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace biofeed::lp {

int LinearProgram::add_variable(double lower, double upper, double cost, std::string name) {
    vars_.push_back(Variable{lower, upper, cost, std::move(name)});
    return num_variables() - 1;
}

int LinearProgram::add_row(std::vector<Term> terms, Relation relation, double rhs, std::string name) {
    rows_.push_back(Row{std::move(terms), relation, rhs, std::move(name)});
    return num_rows() - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
    auto& v = vars_.at(var);
    v.lower = lower;
    v.upper = upper;
}

void LinearProgram::set_cost(int var, double cost) { vars_.at(var).cost = cost; }

void LinearProgram::set_rhs(int row, double rhs) { rows_.at(row).rhs = rhs; }

void LinearProgram::add_term(int row, int var, double coef) {
    rows_.at(row).terms.push_back(Term{var, coef});
}

void LinearProgram::validate() const {
    for (int j = 0; j < num_variables(); ++j) {
        const auto& v = vars_[j];
        if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.cost)) {
            throw std::invalid_argument("variable " + std::to_string(j) + " (" + v.name +
                                        ") has a non-finite cost or NaN bound");
        }
        if (v.lower > v.upper) {
            throw std::invalid_argument("variable " + std::to_string(j) + " (" + v.name +
                                        ") has lower bound above upper bound");
        }
        if (v.lower == kInfinity || v.upper == -kInfinity) {
            throw std::invalid_argument("variable " + std::to_string(j) + " (" + v.name +
                                        ") has an infinite bound on the wrong side");
        }
    }
    for (int i = 0; i < num_rows(); ++i) {
        const auto& r = rows_[i];
        if (!std::isfinite(r.rhs)) {
            throw std::invalid_argument("row " + std::to_string(i) + " (" + r.name + ") has non-finite rhs");
        }
        for (const auto& t : r.terms) {
            if (t.var < 0 || t.var >= num_variables()) {
                throw std::invalid_argument("row " + std::to_string(i) + " (" + r.name +
                                            ") references unknown variable " + std::to_string(t.var));
            }
            if (!std::isfinite(t.coef)) {
                throw std::invalid_argument("row " + std::to_string(i) + " (" + r.name +
                                            ") has a non-finite coefficient");
            }
        }
    }
}

}  // namespace biofeed::lp
