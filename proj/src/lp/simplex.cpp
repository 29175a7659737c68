#include "biofeed/lp/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace biofeed::lp {

std::string to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper, Zero };

class DenseSimplex {
public:
    DenseSimplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {
        m_ = lp.num_rows();
        n_ = lp.num_variables();
        a_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
        for (int i = 0; i < m_; ++i) {
            for (const auto& t : lp.row(i).terms) a_[idx(i, t.var)] += t.coef;
        }
        b_.resize(m_);
        for (int i = 0; i < m_; ++i) b_[i] = lp.row(i).rhs;
    }

    LpSolution run() {
        initialize();
        LpSolution sol;

        if (num_art_ > 0) {
            std::vector<double> phase1(ncols_, 0.0);
            for (int j = n_ + m_; j < ncols_; ++j) phase1[j] = 1.0;
            set_costs(phase1);
            iterate(sol.iterations);
            double infeas = 0.0;
            for (int j = n_ + m_; j < ncols_; ++j) infeas += x_[j];
            double scale = 1.0;
            for (double v : b_) scale = std::max(scale, std::abs(v));
            if (infeas > opt_.feasibility_tol * scale) {
                sol.status = Status::Infeasible;
                return sol;
            }
            for (int j = n_ + m_; j < ncols_; ++j) {
                up_[j] = 0.0;
                if (state_[j] != VarState::Basic) {
                    x_[j] = 0.0;
                    state_[j] = VarState::AtLower;
                }
            }
            drive_out_artificials();
        }

        std::vector<double> phase2(ncols_, 0.0);
        for (int j = 0; j < n_; ++j) phase2[j] = lp_.variable(j).cost;
        set_costs(phase2);
        if (!iterate(sol.iterations)) {
            sol.status = Status::Unbounded;
            return sol;
        }
        refine(sol);
        return sol;
    }

private:
    [[nodiscard]] std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }
    [[nodiscard]] std::size_t tidx(int i, int j) const { return static_cast<std::size_t>(i) * ncols_ + j; }

    // Original-data coefficient of column j in row i.
    [[nodiscard]] double column_entry(int i, int j) const {
        if (j < n_) return a_[idx(i, j)];
        if (j < n_ + m_) return (j - n_ == i) ? 1.0 : 0.0;
        return (art_row_[j - n_ - m_] == i) ? art_sign_[j - n_ - m_] : 0.0;
    }

    void initialize() {
        // Columns: structural, one slack per row, then artificials as needed.
        lo_.clear();
        up_.clear();
        for (int j = 0; j < n_; ++j) {
            lo_.push_back(lp_.variable(j).lower);
            up_.push_back(lp_.variable(j).upper);
        }
        for (int i = 0; i < m_; ++i) {
            switch (lp_.row(i).relation) {
                case Relation::LessEqual: lo_.push_back(0.0); up_.push_back(kInfinity); break;
                case Relation::GreaterEqual: lo_.push_back(-kInfinity); up_.push_back(0.0); break;
                case Relation::Equal: lo_.push_back(0.0); up_.push_back(0.0); break;
            }
        }
        std::vector<double> xs(n_, 0.0);
        std::vector<VarState> st(n_ + m_, VarState::AtLower);
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lo_[j])) {
                xs[j] = lo_[j];
                st[j] = VarState::AtLower;
            } else if (std::isfinite(up_[j])) {
                xs[j] = up_[j];
                st[j] = VarState::AtUpper;
            } else {
                xs[j] = 0.0;
                st[j] = VarState::Zero;
            }
        }
        std::vector<double> resid(m_);
        head_.assign(m_, -1);
        art_row_.clear();
        art_sign_.clear();
        for (int i = 0; i < m_; ++i) {
            double r = b_[i];
            for (int j = 0; j < n_; ++j) r -= a_[idx(i, j)] * xs[j];
            resid[i] = r;
            const int s = n_ + i;
            if (r >= lo_[s] && r <= up_[s]) {
                head_[i] = s;
            } else {
                art_row_.push_back(i);
                art_sign_.push_back(r >= 0.0 ? 1.0 : -1.0);
                st[s] = std::isfinite(lo_[s]) ? VarState::AtLower : VarState::AtUpper;
            }
        }
        num_art_ = static_cast<int>(art_row_.size());
        ncols_ = n_ + m_ + num_art_;
        for (int k = 0; k < num_art_; ++k) {
            lo_.push_back(0.0);
            up_.push_back(kInfinity);
            head_[art_row_[k]] = n_ + m_ + k;
        }
        state_.assign(ncols_, VarState::Basic);
        x_.assign(ncols_, 0.0);
        for (int j = 0; j < n_ + m_; ++j) {
            state_[j] = st[j];
            if (j < n_) x_[j] = xs[j];
        }
        for (int i = 0; i < m_; ++i) {
            const int h = head_[i];
            state_[h] = VarState::Basic;
            x_[h] = h >= n_ + m_ ? std::abs(resid[i]) : resid[i];
        }
        // Initial basis is diagonal with entries +-1.
        tab_.assign(static_cast<std::size_t>(m_) * ncols_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const int h = head_[i];
            const double diag = h >= n_ + m_ ? art_sign_[h - n_ - m_] : 1.0;
            for (int j = 0; j < ncols_; ++j) tab_[tidx(i, j)] = column_entry(i, j) / diag;
        }
    }

    void set_costs(const std::vector<double>& c) {
        cost_ = c;
        d_ = c;
        for (int i = 0; i < m_; ++i) {
            const double cb = cost_[head_[i]];
            if (cb == 0.0) continue;
            for (int j = 0; j < ncols_; ++j) d_[j] -= cb * tab_[tidx(i, j)];
        }
    }

    void pivot(int p, int q) {
        const double piv = tab_[tidx(p, q)];
        double* prow = &tab_[tidx(p, 0)];
        for (int j = 0; j < ncols_; ++j) prow[j] /= piv;
        prow[q] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == p) continue;
            double* row = &tab_[tidx(i, 0)];
            const double f = row[q];
            if (f == 0.0) continue;
            for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
            row[q] = 0.0;
        }
        const double dq = d_[q];
        if (dq != 0.0) {
            for (int j = 0; j < ncols_; ++j) d_[j] -= dq * prow[j];
            d_[q] = 0.0;
        }
        state_[head_[p]] = VarState::AtLower;  // caller fixes the exact bound
        head_[p] = q;
        state_[q] = VarState::Basic;
    }

    // Returns false on unboundedness.
    bool iterate(int& iterations) {
        const int cap = opt_.max_iterations > 0 ? opt_.max_iterations : 100 * (m_ + ncols_) + 1000;
        int degenerate_run = 0;
        bool bland = false;
        for (;;) {
            int q = -1;
            int dir = 0;
            double best = 0.0;
            for (int j = 0; j < ncols_; ++j) {
                const VarState s = state_[j];
                if (s == VarState::Basic || lo_[j] == up_[j]) continue;
                const double dj = d_[j];
                int cand_dir = 0;
                if ((s == VarState::AtLower || s == VarState::Zero) && dj < -opt_.optimality_tol) cand_dir = 1;
                else if ((s == VarState::AtUpper || s == VarState::Zero) && dj > opt_.optimality_tol) cand_dir = -1;
                if (cand_dir == 0) continue;
                if (bland) {
                    q = j;
                    dir = cand_dir;
                    break;
                }
                if (std::abs(dj) > best) {
                    best = std::abs(dj);
                    q = j;
                    dir = cand_dir;
                }
            }
            if (q < 0) return true;

            double tmax = (std::isfinite(lo_[q]) && std::isfinite(up_[q])) ? up_[q] - lo_[q] : kInfinity;
            int leave = -1;
            bool leave_to_upper = false;
            double leave_alpha = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double a = tab_[tidx(i, q)];
                if (std::abs(a) <= opt_.pivot_tol) continue;
                const int jb = head_[i];
                const double rate = -dir * a;
                double lim;
                bool to_upper;
                if (rate > 0.0) {
                    if (!std::isfinite(up_[jb])) continue;
                    lim = (up_[jb] - x_[jb]) / rate;
                    to_upper = true;
                } else {
                    if (!std::isfinite(lo_[jb])) continue;
                    lim = (x_[jb] - lo_[jb]) / -rate;
                    to_upper = false;
                }
                lim = std::max(lim, 0.0);
                bool take = false;
                if (lim < tmax - 1e-12) {
                    take = true;
                } else if (leave >= 0 && lim <= tmax + 1e-12) {
                    take = bland ? jb < head_[leave] : std::abs(a) > std::abs(leave_alpha);
                }
                if (take) {
                    tmax = std::min(tmax, lim);
                    leave = i;
                    leave_to_upper = to_upper;
                    leave_alpha = a;
                }
            }
            if (!std::isfinite(tmax)) return false;

            const double t = tmax;
            if (t != 0.0) {
                for (int i = 0; i < m_; ++i) {
                    const double a = tab_[tidx(i, q)];
                    if (a != 0.0) x_[head_[i]] -= dir * t * a;
                }
            }
            if (leave < 0) {
                if (dir > 0) {
                    x_[q] = up_[q];
                    state_[q] = VarState::AtUpper;
                } else {
                    x_[q] = lo_[q];
                    state_[q] = VarState::AtLower;
                }
            } else {
                const int jb = head_[leave];
                x_[q] += dir * t;
                pivot(leave, q);
                x_[jb] = leave_to_upper ? up_[jb] : lo_[jb];
                state_[jb] = leave_to_upper ? VarState::AtUpper : VarState::AtLower;
            }

            if (t <= 1e-12) {
                if (++degenerate_run > opt_.bland_after) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }
            if (++iterations > cap) {
                throw NumericalError("simplex iteration limit reached (" + std::to_string(cap) +
                                     " pivots); possible cycling");
            }
        }
    }

    void drive_out_artificials() {
        for (int p = 0; p < m_; ++p) {
            if (head_[p] < n_ + m_) continue;
            int best = -1;
            double best_abs = 1e-7;
            for (int j = 0; j < n_ + m_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                const double a = std::abs(tab_[tidx(p, j)]);
                if (a > best_abs) {
                    best_abs = a;
                    best = j;
                }
            }
            if (best < 0) continue;  // redundant row; the artificial stays basic at zero
            const int art = head_[p];
            pivot(p, best);
            x_[art] = 0.0;
            state_[art] = VarState::AtLower;
        }
    }

    void refine(LpSolution& sol) {
        using Eigen::MatrixXd;
        using Eigen::VectorXd;
        MatrixXd basis(m_, m_);
        VectorXd rhs(m_);
        VectorXd cb(m_);
        for (int i = 0; i < m_; ++i) rhs[i] = b_[i];
        for (int j = 0; j < ncols_; ++j) {
            if (state_[j] == VarState::Basic) continue;
            double v = x_[j];
            if (state_[j] == VarState::AtLower) v = lo_[j];
            else if (state_[j] == VarState::AtUpper) v = up_[j];
            else v = 0.0;
            x_[j] = v;
            if (v == 0.0) continue;
            for (int i = 0; i < m_; ++i) rhs[i] -= column_entry(i, j) * v;
        }
        for (int k = 0; k < m_; ++k) {
            const int h = head_[k];
            cb[k] = cost_[h];
            for (int i = 0; i < m_; ++i) basis(i, k) = column_entry(i, h);
        }
        VectorXd xb(m_);
        VectorXd y(m_);
        if (m_ > 0) {
            Eigen::PartialPivLU<MatrixXd> lu(basis);
            const double rc = lu.rcond();
            if (!(rc > 1e-14)) {
                std::ostringstream os;
                os << "numerically singular basis (rcond=" << rc << "); basic rows:";
                for (int k = 0; k < m_; ++k) {
                    const int h = head_[k];
                    os << ' ' << lp_.row(k).name << "<-";
                    if (h < n_) os << "x" << h << "(" << lp_.variable(h).name << ")";
                    else if (h < n_ + m_) os << "slack" << (h - n_);
                    else os << "art" << art_row_[h - n_ - m_];
                }
                throw NumericalError(os.str());
            }
            xb = lu.solve(rhs);
            y = lu.transpose().solve(cb);
        }
        for (int k = 0; k < m_; ++k) {
            const int h = head_[k];
            double v = xb[k];
            const double tol = 1e-6 * (1.0 + std::abs(v));
            if (v < lo_[h] - tol || v > up_[h] + tol) {
                std::ostringstream os;
                os << "refactored basic value out of bounds: column " << h << " value " << v << " bounds ["
                   << lo_[h] << ", " << up_[h] << "] in row " << lp_.row(k).name;
                throw NumericalError(os.str());
            }
            x_[h] = std::clamp(v, lo_[h], up_[h]);
        }

        sol.status = Status::Optimal;
        sol.primal.assign(x_.begin(), x_.begin() + n_);
        sol.duals.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) sol.duals[i] = y[i];
        sol.reduced_costs.assign(n_, 0.0);
        double obj = 0.0;
        for (int j = 0; j < n_; ++j) {
            double dj = lp_.variable(j).cost;
            for (int i = 0; i < m_; ++i) dj -= y[i] * a_[idx(i, j)];
            sol.reduced_costs[j] = dj;
            obj += lp_.variable(j).cost * sol.primal[j];
        }
        sol.objective = obj;
    }

    const LinearProgram& lp_;
    const SolverOptions& opt_;
    int m_ = 0;
    int n_ = 0;
    int ncols_ = 0;
    int num_art_ = 0;
    std::vector<double> a_;
    std::vector<double> b_;
    std::vector<double> lo_, up_, cost_, d_, x_;
    std::vector<VarState> state_;
    std::vector<int> head_;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;
    std::vector<double> tab_;
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolverOptions& options) {
    lp.validate();
    DenseSimplex simplex(lp, options);
    return simplex.run();
}

LpSolution solve_with_fixed(const LinearProgram& lp, std::span<const Fixing> fixings, const SolverOptions& options) {
    if (fixings.empty()) return solve(lp, options);
    LinearProgram pinned = lp;
    for (const auto& f : fixings) {
        const auto& v = lp.variable(f.var);
        if (!(f.value >= v.lower && f.value <= v.upper)) {
            throw std::invalid_argument("fixing for variable " + std::to_string(f.var) + " (" + v.name +
                                        ") lies outside its bounds");
        }
        pinned.set_bounds(f.var, f.value, f.value);
    }
    return solve(pinned, options);
}

}  // namespace biofeed::lp
