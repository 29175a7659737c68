#include "biofeed/lp/lp_format.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace biofeed::lp {

namespace {

void write_linear(std::ostream& out, const std::vector<Term>& terms) {
    bool first = true;
    for (const auto& t : terms) {
        if (t.coef == 0.0) continue;
        const double mag = std::abs(t.coef);
        if (first) {
            if (t.coef < 0.0) out << "- ";
        } else {
            out << (t.coef < 0.0 ? " - " : " + ");
        }
        out << mag << " x" << t.var;
        first = false;
    }
    if (first) out << "0 x0";
}

}  // namespace

void write_lp_format(const LinearProgram& lp, std::ostream& out) {
    const auto old_precision = out.precision(17);
    out << "\\ variables\n";
    for (int j = 0; j < lp.num_variables(); ++j) {
        if (!lp.variable(j).name.empty()) out << "\\ x" << j << " = " << lp.variable(j).name << "\n";
    }
    out << "\\ rows\n";
    for (int i = 0; i < lp.num_rows(); ++i) {
        if (!lp.row(i).name.empty()) out << "\\ c" << i << " = " << lp.row(i).name << "\n";
    }

    out << "Minimize\n obj: ";
    std::vector<Term> obj;
    for (int j = 0; j < lp.num_variables(); ++j) {
        if (lp.variable(j).cost != 0.0) obj.push_back({j, lp.variable(j).cost});
    }
    write_linear(out, obj);
    out << "\nSubject To\n";
    for (int i = 0; i < lp.num_rows(); ++i) {
        const auto& r = lp.row(i);
        out << " c" << i << ": ";
        write_linear(out, r.terms);
        switch (r.relation) {
            case Relation::LessEqual: out << " <= "; break;
            case Relation::GreaterEqual: out << " >= "; break;
            case Relation::Equal: out << " = "; break;
        }
        out << r.rhs << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.num_variables(); ++j) {
        const auto& v = lp.variable(j);
        const bool lo_inf = !std::isfinite(v.lower);
        const bool up_inf = !std::isfinite(v.upper);
        if (lo_inf && up_inf) {
            out << " x" << j << " free\n";
        } else if (v.lower == v.upper) {
            out << " x" << j << " = " << v.lower << "\n";
        } else {
            out << " ";
            if (lo_inf) out << "-inf";
            else out << v.lower;
            out << " <= x" << j << " <= ";
            if (up_inf) out << "+inf";
            else out << v.upper;
            out << "\n";
        }
    }
    out << "End\n";
    out.precision(old_precision);
}

}  // namespace biofeed::lp
