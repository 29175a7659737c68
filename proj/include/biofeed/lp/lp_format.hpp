#pragma once

#include <iosfwd>

#include "biofeed/lp/linear_program.hpp"

namespace biofeed::lp {

/// Writes `lp` in CPLEX LP text format for cross-checking with external solvers.
///
/// Variables are emitted as x<j> and rows as c<i>; the model's own names go
/// into a leading comment block so the dump stays parseable whatever the tags
/// contain. Coefficients use 17 significant digits.
void write_lp_format(const LinearProgram& lp, std::ostream& out);

}  // namespace biofeed::lp
