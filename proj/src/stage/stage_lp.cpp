#include "biofeed/stage/stage_lp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace biofeed {

using lp::Relation;
using lp::Term;

namespace {

std::string tag(bool named, const std::string& base, const std::string& id) {
    return named ? base + "[" + id + "]" : std::string{};
}

}  // namespace

BlockLayout append_stage_block(lp::LinearProgram& lp, const StageModel& model, const StageRealization& real,
                               const BlockLinks& links, double weight, bool charge_holding, bool named,
                               bool compact) {
    const auto& net = model.network();
    const auto& sc = model.scenario();
    const int n = net.num_nodes();
    const int ns = net.num_storage();
    BlockLayout b;
    b.speed.assign(static_cast<std::size_t>(n), -1);
    b.throughput.assign(static_cast<std::size_t>(n), -1);

    const double hold = weight * real.beta * sc.holding_cost;
    const double penalty = weight * real.beta * sc.penalty_cost;

    for (int i = 0; i < n; ++i) {
        const auto& e = net.node(i);
        if (e.kind == EquipmentKind::Storage) continue;
        const auto k = static_cast<std::size_t>(i);
        double up = real.infeed_cap[k];
        if (i == net.source()) up = std::min(up, real.supply);
        if (compact) {
            // X = c V (processing) or X <= c V (transport) with V <= vbar collapses to a bound on X.
            up = std::min(up, real.flow_per_speed[k] * real.speed_bound[k]);
        } else {
            b.speed[k] = lp.add_variable(0.0, real.speed_bound[k], 0.0, tag(named, "V", e.id));
        }
        b.throughput[k] = lp.add_variable(0.0, up, 0.0, tag(named, "X", e.id));
    }
    for (int a = 0; a < net.num_arcs(); ++a) {
        const auto& arc = net.arcs()[static_cast<std::size_t>(a)];
        b.arc_flow.push_back(lp.add_variable(0.0, lp::kInfinity, 0.0, tag(named, "F", arc.from + ">" + arc.to)));
    }
    for (int s = 0; s < ns; ++s) {
        const auto& id = net.node(net.storage_nodes()[static_cast<std::size_t>(s)]).id;
        const double cap = real.capacity[static_cast<std::size_t>(s)];
        if (links.state_var.empty()) {
            b.state.push_back(lp.add_variable(0.0, cap, charge_holding ? hold : 0.0, tag(named, "I", id)));
        } else {
            const int v = links.state_var[static_cast<std::size_t>(s)];
            const auto& var = lp.variable(v);
            lp.set_bounds(v, var.lower, std::min(var.upper, cap));
            if (charge_holding) lp.set_cost(v, var.cost + hold);
            b.state.push_back(v);
        }
    }
    b.shortfall = lp.add_variable(0.0, lp::kInfinity, penalty, named ? "p" : "");

    for (int i = 0; i < n; ++i) {
        const auto& e = net.node(i);
        if (e.kind == EquipmentKind::Storage) continue;
        const auto k = static_cast<std::size_t>(i);
        const int x = b.throughput[k];
        const Relation rel = e.kind == EquipmentKind::Processing ? Relation::Equal : Relation::LessEqual;
        if (!compact) lp.add_row({{x, 1.0}, {b.speed[k], -real.flow_per_speed[k]}}, rel, 0.0, tag(named, "speed", e.id));
        if (i != net.source()) {
            std::vector<Term> t;
            for (int a : net.in_arcs(i)) t.push_back({b.arc_flow[static_cast<std::size_t>(a)], 1.0});
            t.push_back({x, -1.0});
            lp.add_row(std::move(t), Relation::Equal, 0.0, tag(named, "in", e.id));
        }
        if (i != net.reactor_feeder()) {
            std::vector<Term> t;
            for (int a : net.out_arcs(i)) t.push_back({b.arc_flow[static_cast<std::size_t>(a)], 1.0});
            t.push_back({x, -real.retention[k]});
            lp.add_row(std::move(t), Relation::Equal, 0.0, tag(named, "out", e.id));
        }
        if (i == net.bypass_split()) {
            lp.add_row({{b.arc_flow[static_cast<std::size_t>(net.bypass_arc())], 1.0},
                        {x, -real.bypass_fraction * real.retention[k]}},
                       Relation::Equal, 0.0, tag(named, "bypass", e.id));
        }
    }
    for (int s = 0; s < ns; ++s) {
        const int node = net.storage_nodes()[static_cast<std::size_t>(s)];
        std::vector<Term> t{{b.state[static_cast<std::size_t>(s)], 1.0}};
        for (int a : net.in_arcs(node)) t.push_back({b.arc_flow[static_cast<std::size_t>(a)], -1.0});
        for (int a : net.out_arcs(node)) t.push_back({b.arc_flow[static_cast<std::size_t>(a)], 1.0});
        double rhs = 0.0;
        if (!links.prev_var.empty()) {
            t.push_back({links.prev_var[static_cast<std::size_t>(s)], -1.0});
        } else {
            rhs = links.prev_value.at(static_cast<std::size_t>(s));
        }
        b.balance_rows.push_back(lp.add_row(std::move(t), Relation::Equal, rhs, tag(named, "balance", net.node(node).id)));
    }
    const auto rf = static_cast<std::size_t>(net.reactor_feeder());
    b.shortfall_row = lp.add_row({{b.shortfall, 1.0}, {b.throughput[rf], real.retention[rf]}}, Relation::GreaterEqual,
                                 real.demand, named ? "shortfall" : "");
    return b;
}

namespace {

void add_cut_row(StageLp& s, const Cut& c, bool named, std::size_t k) {
    std::vector<Term> t{{s.theta, 1.0}};
    for (std::size_t j = 0; j < c.gradient.size(); ++j) {
        if (c.gradient[j] != 0.0) t.push_back({s.layout.state[j], -c.gradient[j]});
    }
    s.lp.add_row(std::move(t), Relation::GreaterEqual, c.intercept, named ? "cut" + std::to_string(k) : "");
}

StageLp base_stage(const StageModel& model, const StageRealization& real, std::span<const double> prev_state,
                   bool terminal, bool named, bool compact = false) {
    if (static_cast<int>(prev_state.size()) != model.num_states()) {
        throw std::invalid_argument("incoming inventory has the wrong dimension");
    }
    StageLp s;
    BlockLinks links;
    links.prev_value.assign(prev_state.begin(), prev_state.end());
    s.layout = append_stage_block(s.lp, model, real, links, 1.0, true, named, compact);
    s.theta = s.lp.add_variable(0.0, terminal ? 0.0 : lp::kInfinity, 1.0, named ? "theta" : "");
    s.first_cut_row = s.lp.num_rows();
    return s;
}

}  // namespace

StageLp build_stage_lp(const StageModel& model, const StageRealization& real, std::span<const double> prev_state,
                       std::span<const Cut> cuts, bool terminal, bool named) {
    StageLp s = base_stage(model, real, prev_state, terminal, named);
    if (!terminal) {
        for (std::size_t k = 0; k < cuts.size(); ++k) add_cut_row(s, cuts[k], named, k);
    }
    return s;
}

std::vector<double> extract_state(const lp::LpSolution& sol, const StageLp& stage, const StageRealization& real) {
    if (!sol.optimal()) throw std::invalid_argument("extract_state needs an optimal solution, got " + lp::to_string(sol.status));
    std::vector<double> x;
    for (std::size_t k = 0; k < stage.layout.state.size(); ++k) {
        const double v = sol.primal[static_cast<std::size_t>(stage.layout.state[k])];
        x.push_back(std::clamp(v, 0.0, real.capacity[k]));
    }
    return x;
}

CutIngredients extract_cut_ingredients(const lp::LpSolution& sol, const StageLp& stage) {
    if (!sol.optimal()) {
        throw std::invalid_argument("cut ingredients need an optimal solution, got " + lp::to_string(sol.status));
    }
    CutIngredients c;
    c.value = sol.objective;
    for (int r : stage.layout.balance_rows) c.gradient.push_back(sol.duals[static_cast<std::size_t>(r)]);
    return c;
}

namespace {


struct LazyResult {
    lp::LpSolution sol;
    StageLp stage;
};

LazyResult solve_lazy(const StageModel& model, const StageRealization& real, std::span<const double> prev,
                      std::span<const Cut> cuts, bool terminal, std::span<const double> fixed) {
    std::vector<std::size_t> active;
    if (!terminal && !cuts.empty()) {
        // Seed with the newest cut and the one highest at the incoming inventory.
        std::size_t best = 0;
        double best_v = -lp::kInfinity;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            const double v = cuts[k].evaluate(prev);
            if (v > best_v) best_v = v, best = k;
        }
        active.push_back(best);
        if (best != cuts.size() - 1) active.push_back(cuts.size() - 1);
    }
    std::vector<char> in_set(cuts.size(), 0);
    for (auto k : active) in_set[k] = 1;

    while (true) {
        StageLp s = base_stage(model, real, prev, terminal, false, true);
        for (auto k : active) add_cut_row(s, cuts[k], false, k);
        lp::LpSolution sol;
        if (fixed.empty()) {
            sol = lp::solve(s.lp);
        } else {
            std::vector<lp::Fixing> fx;
            for (std::size_t j = 0; j < fixed.size(); ++j) {
                const int v = s.layout.state[j];
                const auto& var = s.lp.variable(v);
                if (fixed[j] < var.lower || fixed[j] > var.upper) {
                    sol.status = lp::Status::Infeasible;
                    return {std::move(sol), std::move(s)};
                }
                fx.push_back({v, fixed[j]});
            }
            sol = lp::solve_with_fixed(s.lp, fx);
        }
        if (!sol.optimal() || terminal) return {std::move(sol), std::move(s)};

        std::vector<double> x;
        for (int v : s.layout.state) x.push_back(sol.primal[static_cast<std::size_t>(v)]);
        const double theta = sol.primal[static_cast<std::size_t>(s.theta)];
        const double tol = 1e-9 * (1.0 + std::abs(theta));
        std::size_t worst = cuts.size();
        double worst_v = theta + tol;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            if (in_set[k]) continue;
            const double v = cuts[k].evaluate(x);
            if (v > worst_v) worst_v = v, worst = k;
        }
        if (worst == cuts.size()) return {std::move(sol), std::move(s)};
        in_set[worst] = 1;
        active.push_back(worst);
    }
}

}  // namespace

StageOutcome solve_stage(const StageModel& model, const StageRealization& real, std::span<const double> prev_state,
                         std::span<const Cut> cuts, bool terminal, std::span<const double> fixed_state) {
    StageOutcome out;
    out.prev_state.assign(prev_state.begin(), prev_state.end());
    auto res = solve_lazy(model, real, out.prev_state, cuts, terminal, fixed_state);
    if (res.sol.status == lp::Status::Infeasible && fixed_state.empty()) {
        bool over = false;
        for (std::size_t k = 0; k < out.prev_state.size(); ++k) {
            if (out.prev_state[k] > real.capacity[k]) {
                out.prev_state[k] = real.capacity[k];
                over = true;
            }
        }
        if (over) {
            spdlog::warn("stage {}: incoming inventory exceeds capacity at moisture {}; clamped to capacity", real.stage,
                         real.moisture);
            out.clamped = true;
            res = solve_lazy(model, real, out.prev_state, cuts, terminal, fixed_state);
        }
    }
    if (!res.sol.optimal()) {
        std::ostringstream os;
        os << "stage " << real.stage << " (" << to_string(real.level) << ", moisture " << real.moisture
           << ") is " << lp::to_string(res.sol.status) << " at incoming inventory [";
        for (std::size_t k = 0; k < prev_state.size(); ++k) os << (k ? ", " : "") << prev_state[k];
        os << "]";
        throw StageInfeasible(os.str());
    }
    const auto& s = res.stage;
    out.state = extract_state(res.sol, s, real);
    out.ingredients = extract_cut_ingredients(res.sol, s);
    out.theta = res.sol.primal[static_cast<std::size_t>(s.theta)];
    out.immediate_cost = res.sol.objective - out.theta;
    out.shortfall = res.sol.primal[static_cast<std::size_t>(s.layout.shortfall)];
    const auto rf = static_cast<std::size_t>(model.network().reactor_feeder());
    out.delivered = res.sol.primal[static_cast<std::size_t>(s.layout.throughput[rf])] * real.retention[rf];
    out.solution = std::move(res.sol);
    return out;
}

}  // namespace biofeed
