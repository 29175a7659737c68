#include "biofeed/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "biofeed/config/instance.hpp"
#include "biofeed/stage/stage_lp.hpp"
#include "biofeed/util/parallel.hpp"

namespace biofeed {

std::string to_string(PlanSource s) { return s == PlanSource::TwoStage ? "two-stage" : "mean-value"; }

void write_static_plan(const StaticPlan& plan, const NetworkSpec& network, std::ostream& out,
                       const std::string& fingerprint, std::uint64_t seed) {
    out << "biofeed-plan 1\n";
    if (!fingerprint.empty()) out << "fingerprint " << fingerprint << " seed " << seed << "\n";
    out << "source " << to_string(plan.source) << "\n";
    for (int t = 0; t < plan.num_stages(); ++t) {
        const auto& row = plan.inventory[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < row.size(); ++k) {
            out << t << ' ' << network.node(network.storage_nodes()[k]).id << ' ' << format_double(row[k]) << "\n";
        }
    }
}

StaticPlan read_static_plan(std::istream& in, const NetworkSpec& network, std::string* fingerprint) {
    auto fail = [](int line, const std::string& msg) {
        throw std::runtime_error("plan file line " + std::to_string(line) + ": " + msg);
    };
    std::string line;
    int no = 1;
    if (!std::getline(in, line) || line != "biofeed-plan 1") fail(no, "expected header 'biofeed-plan 1'");
    ++no;
    StaticPlan p;
    if (!std::getline(in, line)) fail(no, "missing source line");
    if (line.rfind("fingerprint ", 0) == 0) {
        std::istringstream ls(line);
        std::string word, fp;
        ls >> word >> fp;
        if (fingerprint) *fingerprint = fp;
        ++no;
        if (!std::getline(in, line)) fail(no, "missing source line");
    }
    if (line == "source two-stage") p.source = PlanSource::TwoStage;
    else if (line == "source mean-value") p.source = PlanSource::MeanValue;
    else fail(no, "expected 'source two-stage' or 'source mean-value'");
    const auto ns = static_cast<std::size_t>(network.num_storage());
    std::vector<std::vector<char>> seen;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int t = -1;
        std::string id, value;
        if (!(ls >> t >> id >> value) || t < 0) fail(no, "expected 'stage node dt'");
        std::size_t k = 0;
        while (k < ns && network.node(network.storage_nodes()[k]).id != id) ++k;
        if (k == ns) fail(no, "unknown storage node '" + id + "'");
        double v = 0.0;
        try {
            v = std::stod(value);
        } catch (const std::exception&) {
            fail(no, "bad inventory '" + value + "'");
        }
        if (!(v >= 0.0) || !std::isfinite(v)) fail(no, "inventory must be finite and nonnegative");
        if (static_cast<std::size_t>(t) >= p.inventory.size()) {
            p.inventory.resize(static_cast<std::size_t>(t) + 1, std::vector<double>(ns, 0.0));
            seen.resize(static_cast<std::size_t>(t) + 1, std::vector<char>(ns, 0));
        }
        if (seen[static_cast<std::size_t>(t)][k]) fail(no, "duplicate entry");
        seen[static_cast<std::size_t>(t)][k] = 1;
        p.inventory[static_cast<std::size_t>(t)][k] = v;
    }
    for (std::size_t t = 0; t < seen.size(); ++t) {
        for (std::size_t k = 0; k < ns; ++k) {
            if (!seen[t][k]) fail(no, "stage " + std::to_string(t) + " lacks an entry for every storage node");
        }
    }
    return p;
}

std::vector<std::vector<double>> sample_moisture_paths(const StageModel& model, int count, std::uint64_t seed,
                                                       std::uint64_t stream) {
    auto rng = derived_rng(seed, stream);
    std::vector<std::vector<double>> paths;
    for (int s = 0; s < count; ++s) {
        std::vector<double> m;
        for (int t = 0; t < model.num_stages(); ++t) {
            const auto level = model.plan()[t].level;
            m.push_back(t == 0 ? model.moisture().mean(level) : model.moisture().sample(level, rng));
        }
        paths.push_back(std::move(m));
    }
    return paths;
}

ExtensiveForm build_two_stage(const StageModel& model, const std::vector<std::vector<double>>& paths) {
    if (paths.empty()) throw std::invalid_argument("two-stage problem needs at least one path");
    const int T = model.num_stages();
    const int ns = model.num_states();
    ExtensiveForm f;
    for (int t = 0; t < T; ++t) {
        const double hold = model.plan()[t].beta * model.scenario().holding_cost;
        std::vector<int> vars;
        for (int k = 0; k < ns; ++k) vars.push_back(f.lp.add_variable(0.0, lp::kInfinity, hold));
        f.inventory.push_back(std::move(vars));
    }
    const double w = 1.0 / static_cast<double>(paths.size());
    const auto init = model.initial_state();
    for (const auto& path : paths) {
        if (static_cast<int>(path.size()) != T) throw std::invalid_argument("moisture path length differs from stage count");
        for (int t = 0; t < T; ++t) {
            BlockLinks links;
            if (t == 0) links.prev_value = init;
            else links.prev_var = f.inventory[static_cast<std::size_t>(t - 1)];
            links.state_var = f.inventory[static_cast<std::size_t>(t)];
            append_stage_block(f.lp, model, model.realize(t, path[static_cast<std::size_t>(t)]), links, w, false,
                               false, true);
            ++f.blocks;
        }
    }
    return f;
}

namespace {

std::vector<double> mean_path(const StageModel& model) {
    std::vector<double> m;
    for (int t = 0; t < model.num_stages(); ++t) m.push_back(model.moisture().mean(model.plan()[t].level));
    return m;
}

}  // namespace

ExtensiveForm build_mean_value(const StageModel& model) { return build_two_stage(model, {mean_path(model)}); }

StaticPlan extract_static_plan(const lp::LpSolution& sol, const ExtensiveForm& form, PlanSource source) {
    if (!sol.optimal()) throw std::invalid_argument("static plan needs an optimal solution, got " + lp::to_string(sol.status));
    StaticPlan p;
    p.source = source;
    for (const auto& stage : form.inventory) {
        std::vector<double> row;
        for (int v : stage) row.push_back(std::max(0.0, sol.primal[static_cast<std::size_t>(v)]));
        p.inventory.push_back(std::move(row));
    }
    return p;
}

namespace {

/// theta_t >= value + slope . (I_{t-1} - I_t - delta)
struct StageCut {
    double value;
    std::vector<double> slope;
    std::vector<double> delta;
};

struct Recourse {
    double value = 0.0;
    std::vector<double> slope;
    double elastic = 0.0;
};

// Shortfall cost of one path and stage for a given inventory change, with the
// balance rows made elastic.
Recourse solve_recourse(const StageModel& model, const StageRealization& real, const std::vector<double>& prev,
                        const std::vector<double>& next, double big_m) {
    lp::LinearProgram lp;
    BlockLinks links;
    links.prev_value = prev;
    auto b = append_stage_block(lp, model, real, links, 1.0, false, false, true);
    std::vector<int> slack;
    for (std::size_t k = 0; k < b.state.size(); ++k) {
        lp.set_bounds(b.state[k], next[k], next[k]);
        const int up = lp.add_variable(0.0, lp::kInfinity, big_m);
        const int down = lp.add_variable(0.0, lp::kInfinity, big_m);
        lp.add_term(b.balance_rows[k], up, 1.0);
        lp.add_term(b.balance_rows[k], down, -1.0);
        slack.push_back(up);
        slack.push_back(down);
    }
    const auto sol = lp::solve(lp);
    if (!sol.optimal()) throw std::runtime_error("elastic recourse problem is " + lp::to_string(sol.status));
    Recourse r;
    r.value = sol.objective;
    for (int row : b.balance_rows) r.slope.push_back(sol.duals[static_cast<std::size_t>(row)]);
    for (int v : slack) r.elastic += sol.primal[static_cast<std::size_t>(v)];
    return r;
}

struct Master {
    std::vector<std::vector<double>> inventory;
    std::vector<double> theta;
    double objective = 0.0;
};

double cut_value(const StageCut& c, const std::vector<double>& prev, const std::vector<double>& next) {
    double v = c.value;
    for (std::size_t k = 0; k < c.slope.size(); ++k) v += c.slope[k] * (prev[k] - next[k] - c.delta[k]);
    return v;
}

// Solves the master with a working set of cuts, adding the most violated cut
// of each stage until every cut holds.
Master solve_master(const std::vector<double>& hold, const std::vector<std::vector<double>>& cap,
                    const std::vector<double>& init, const std::vector<std::vector<StageCut>>& cuts,
                    std::vector<std::vector<std::size_t>>& active) {
    const auto T = hold.size();
    const auto ns = init.size();
    for (;;) {
        lp::LinearProgram lp;
        std::vector<std::vector<int>> inv(T);
        std::vector<int> theta(T);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t k = 0; k < ns; ++k) inv[t].push_back(lp.add_variable(0.0, cap[t][k], hold[t]));
            theta[t] = lp.add_variable(0.0, lp::kInfinity, 1.0);
        }
        for (std::size_t t = 0; t < T; ++t) {
            for (auto idx : active[t]) {
                const auto& c = cuts[t][idx];
                std::vector<lp::Term> terms{{theta[t], 1.0}};
                double rhs = c.value;
                for (std::size_t k = 0; k < ns; ++k) {
                    rhs -= c.slope[k] * c.delta[k];
                    if (t == 0) rhs += c.slope[k] * init[k];
                    else terms.push_back({inv[t - 1][k], -c.slope[k]});
                    terms.push_back({inv[t][k], c.slope[k]});
                }
                lp.add_row(std::move(terms), lp::Relation::GreaterEqual, rhs);
            }
        }
        const auto sol = lp::solve(lp);
        if (!sol.optimal()) throw std::runtime_error("two-stage master problem is " + lp::to_string(sol.status));
        Master m;
        m.objective = sol.objective;
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> row;
            for (std::size_t k = 0; k < ns; ++k) {
                row.push_back(std::clamp(sol.primal[static_cast<std::size_t>(inv[t][k])], 0.0, cap[t][k]));
            }
            m.inventory.push_back(std::move(row));
            m.theta.push_back(sol.primal[static_cast<std::size_t>(theta[t])]);
        }
        bool added = false;
        for (std::size_t t = 0; t < T; ++t) {
            const auto& prev = t == 0 ? init : m.inventory[t - 1];
            const double tol = 1e-9 * (1.0 + std::abs(m.theta[t]));
            std::size_t worst = cuts[t].size();
            double worst_v = m.theta[t] + tol;
            for (std::size_t i = 0; i < cuts[t].size(); ++i) {
                const double v = cut_value(cuts[t][i], prev, m.inventory[t]);
                if (v > worst_v && std::find(active[t].begin(), active[t].end(), i) == active[t].end()) {
                    worst_v = v;
                    worst = i;
                }
            }
            if (worst < cuts[t].size()) {
                active[t].push_back(worst);
                added = true;
            }
        }
        if (!added) {
            // Keep only cuts binding at the optimum for the next call.
            for (std::size_t t = 0; t < T; ++t) {
                const auto& prev = t == 0 ? init : m.inventory[t - 1];
                std::vector<std::size_t> keep;
                for (auto i : active[t]) {
                    if (cut_value(cuts[t][i], prev, m.inventory[t]) >= m.theta[t] - 1e-7 * (1.0 + std::abs(m.theta[t]))) {
                        keep.push_back(i);
                    }
                }
                active[t] = std::move(keep);
            }
            return m;
        }
    }
}

StaticSolution solve_decomposed(const StageModel& model, const std::vector<std::vector<double>>& paths,
                                PlanSource source, const TwoStageOptions& opt) {
    const auto T = static_cast<std::size_t>(model.num_stages());
    const auto ns = static_cast<std::size_t>(model.num_states());
    const auto S = paths.size();
    const auto& sc = model.scenario();
    const auto init = model.initial_state();

    std::vector<double> hold(T);
    std::vector<std::vector<double>> cap(T, std::vector<double>(ns, lp::kInfinity));
    std::vector<std::vector<StageRealization>> reals(T);
    double max_beta = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        hold[t] = model.plan()[static_cast<int>(t)].beta * sc.holding_cost;
        max_beta = std::max(max_beta, model.plan()[static_cast<int>(t)].beta);
        for (const auto& path : paths) {
            if (path.size() != T) throw std::invalid_argument("moisture path length differs from stage count");
            reals[t].push_back(model.realize(static_cast<int>(t), path[t]));
            for (std::size_t k = 0; k < ns; ++k) cap[t][k] = std::min(cap[t][k], reals[t].back().capacity[k]);
        }
    }
    // Far above any marginal value of inventory, so elastic slack is used only
    // when a plan cannot be met.
    const double big_m = 1e3 * (sc.penalty_cost + sc.holding_cost + 1.0) * std::max(1.0, max_beta);

    std::vector<std::vector<StageCut>> cuts(T);
    std::vector<std::vector<std::size_t>> active(T);
    Master m;
    m.inventory.assign(T, std::vector<double>(ns, 0.0));
    m.theta.assign(T, 0.0);

    StaticSolution best;
    best.objective = lp::kInfinity;
    best.decomposed = true;
    best.plan.source = source;
    double best_elastic = 0.0;
    double lb = -lp::kInfinity;

    for (int it = 1; it <= opt.max_iterations; ++it) {
        std::vector<Recourse> rec(T * S);
        parallel_for(static_cast<int>(T * S), opt.workers, [&](int i) {
            const auto t = static_cast<std::size_t>(i) / S;
            const auto s = static_cast<std::size_t>(i) % S;
            const auto& prev = t == 0 ? init : m.inventory[t - 1];
            auto real = reals[t][s];
            // Cuts are averaged over equally weighted paths.
            real.beta /= static_cast<double>(S);
            rec[static_cast<std::size_t>(i)] = solve_recourse(model, real, prev, m.inventory[t], big_m);
        });
        double ub = 0.0;
        double elastic = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const auto& prev = t == 0 ? init : m.inventory[t - 1];
            StageCut c{0.0, std::vector<double>(ns, 0.0), {}};
            for (std::size_t k = 0; k < ns; ++k) c.delta.push_back(prev[k] - m.inventory[t][k]);
            for (std::size_t s = 0; s < S; ++s) {
                const auto& r = rec[t * S + s];
                c.value += r.value;
                elastic += r.elastic;
                for (std::size_t k = 0; k < ns; ++k) c.slope[k] += r.slope[k];
            }
            for (std::size_t k = 0; k < ns; ++k) ub += hold[t] * m.inventory[t][k];
            ub += c.value;
            cuts[t].push_back(std::move(c));
            active[t].push_back(cuts[t].size() - 1);
        }
        if (ub < best.objective) {
            best.objective = ub;
            best.plan.inventory = m.inventory;
            best_elastic = elastic;
        }
        best.iterations = it;
        if (best.objective - lb <= opt.tolerance * std::max(1.0, std::abs(best.objective))) break;
        m = solve_master(hold, cap, init, cuts, active);
        lb = std::max(lb, m.objective);
        if (best.objective - lb <= opt.tolerance * std::max(1.0, std::abs(best.objective))) break;
    }
    if (best_elastic > 1e-7) {
        throw PlanInfeasible("no inventory plan satisfies the flow limits on every sampled path");
    }
    return best;
}

}  // namespace

StaticSolution solve_two_stage(const StageModel& model, const std::vector<std::vector<double>>& paths,
                               PlanSource source, const TwoStageOptions& options) {
    if (paths.empty()) throw std::invalid_argument("two-stage problem needs at least one path");
    const auto blocks = static_cast<std::int64_t>(paths.size()) * model.num_stages();
    if (blocks > options.monolithic_blocks) return solve_decomposed(model, paths, source, options);
    const auto form = build_two_stage(model, paths);
    const auto sol = lp::solve(form.lp);
    if (!sol.optimal()) {
        throw PlanInfeasible("no inventory plan satisfies the flow limits on every sampled path (" +
                                 lp::to_string(sol.status) + ")");
    }
    StaticSolution s;
    s.plan = extract_static_plan(sol, form, source);
    s.objective = sol.objective;
    s.iterations = 1;
    return s;
}

StaticSolution solve_mean_value(const StageModel& model, const TwoStageOptions& options) {
    return solve_two_stage(model, {mean_path(model)}, PlanSource::MeanValue, options);
}

DeterministicEquivalent build_deterministic_equivalent(const StageModel& model, const RealizationGrid& grid,
                                                       std::int64_t node_cap, int start_stage,
                                                       std::vector<double> initial_state) {
    const int T = model.num_stages();
    if (grid.num_stages() != T) throw std::invalid_argument("grid stage count differs from the model");
    if (start_stage < 0 || start_stage >= T) throw std::invalid_argument("start stage out of range");
    if (initial_state.empty()) initial_state = model.initial_state();
    if (static_cast<int>(initial_state.size()) != model.num_states()) {
        throw std::invalid_argument("initial inventory has the wrong dimension");
    }
    std::int64_t nodes = 0;
    std::int64_t width = 1;
    for (int t = start_stage; t < T; ++t) {
        width *= static_cast<std::int64_t>(grid.moisture[static_cast<std::size_t>(t)].size());
        nodes += width;
        if (nodes > node_cap) {
            throw TreeTooLarge("scenario tree has more than " + std::to_string(node_cap) + " nodes (at least " +
                               std::to_string(nodes) + " by stage " + std::to_string(t) + ")");
        }
    }
    DeterministicEquivalent de;
    de.nodes = nodes;
    std::vector<std::vector<int>> parent_states;
    width = 1;
    for (int t = start_stage; t < T; ++t) {
        const auto& ms = grid.moisture[static_cast<std::size_t>(t)];
        const auto n = static_cast<std::int64_t>(ms.size());
        width *= n;
        const double prob = 1.0 / static_cast<double>(width);
        std::vector<std::vector<int>> states;
        for (std::int64_t node = 0; node < width; ++node) {
            BlockLinks links;
            if (t == start_stage) links.prev_value = initial_state;
            else links.prev_var = parent_states[static_cast<std::size_t>(node / n)];
            const auto real = model.realize(t, ms[static_cast<std::size_t>(node % n)]);
            states.push_back(append_stage_block(de.lp, model, real, links, prob).state);
        }
        if (t == start_stage) de.root_inventory = states;
        parent_states = std::move(states);
    }
    return de;
}

}  // namespace biofeed
