#include "biofeed/sddp/sddp.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "biofeed/util/parallel.hpp"

namespace biofeed {

namespace {

constexpr std::uint64_t kGridStream = 0x67726964;
constexpr std::uint64_t kForwardStream = 0x66776420;
constexpr std::uint64_t kBoundStream = 0x75627374;

}  // namespace

void TrainerConfig::validate() const {
    if (realizations < 1) throw std::invalid_argument("realizations per stage must be >= 1");
    if (forward_paths < 1) throw std::invalid_argument("forward paths must be >= 1");
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 0.5)");
    if (!(stall_eps > 0.0)) throw std::invalid_argument("stall tolerance must be positive");
    if (stall_window < 1) throw std::invalid_argument("stall window must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("max iterations must be >= 1");
    if (bound_paths < 2) throw std::invalid_argument("bound paths must be >= 2");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

TrainerConfig TrainerConfig::from(const RunSettings& run, std::uint64_t seed) {
    TrainerConfig c;
    c.realizations = run.realizations;
    c.forward_paths = run.forward_paths;
    c.alpha = run.alpha;
    c.stall_eps = run.stall_eps;
    c.stall_window = run.stall_window;
    c.max_iters = run.max_iters;
    c.gap_tol = run.gap_tol > 0.0 ? run.gap_tol : -1.0;
    c.seed = seed;
    return c;
}

std::int64_t RealizationGrid::path_count(std::int64_t cap) const {
    std::int64_t n = 1;
    for (const auto& s : moisture) {
        n *= static_cast<std::int64_t>(s.size());
        if (n > cap) return cap + 1;
    }
    return n;
}

RealizationGrid sample_grid(const StageModel& model, int realizations, std::uint64_t seed) {
    RealizationGrid g;
    auto rng = derived_rng(seed, kGridStream);
    for (int t = 0; t < model.num_stages(); ++t) {
        const auto level = model.plan()[t].level;
        if (t == 0) {
            g.moisture.push_back({model.moisture().mean(level)});
            continue;
        }
        std::vector<double> v;
        for (int j = 0; j < realizations; ++j) v.push_back(model.moisture().sample(level, rng));
        g.moisture.push_back(std::move(v));
    }
    return g;
}

std::vector<double> grid_path(const RealizationGrid& grid, std::int64_t k) {
    std::vector<double> m(grid.moisture.size());
    for (std::size_t t = grid.moisture.size(); t-- > 0;) {
        const auto n = static_cast<std::int64_t>(grid.moisture[t].size());
        m[t] = grid.moisture[t][static_cast<std::size_t>(k % n)];
        k /= n;
    }
    return m;
}

std::string fingerprint(const StageModel& model, const TrainerConfig& c) {
    Instance inst{model.network(), model.moisture(), model.physics().tables(), model.scenario(), RunSettings{}};
    std::ostringstream os;
    os << to_yaml(inst);
    os << "plan";
    for (const auto& s : model.plan().stages) os << ' ' << level_code(s.level) << ':' << format_double(s.beta);
    os << "\ntrainer " << c.realizations << ' ' << c.forward_paths << ' ' << c.exhaustive_forward << ' '
       << format_double(c.alpha) << ' ' << format_double(c.stall_eps) << ' ' << c.stall_window << ' ' << c.max_iters
       << ' ' << format_double(c.gap_tol) << ' ' << c.seed << '\n';
    return fnv1a_hex(os.str());
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::Continue: return "continue";
        case StopReason::BoundStall: return "bound-stall";
        case StopReason::GapClosed: return "gap-closed";
        case StopReason::MaxIter: return "max-iterations";
    }
    return "?";
}

double normal_upper_quantile(double alpha) {
    if (alpha == 0.025) return kZ975;
    return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha));
}

StatisticalBound statistical_upper_bound(const std::vector<double>& costs, double alpha) {
    StatisticalBound b;
    b.samples = static_cast<int>(costs.size());
    if (costs.empty()) throw std::invalid_argument("statistical bound needs at least one cost");
    b.mean = std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
    if (costs.size() < 2) {
        b.infinite_width = true;
        b.upper = std::numeric_limits<double>::infinity();
        return b;
    }
    double ss = 0.0;
    for (double c : costs) ss += (c - b.mean) * (c - b.mean);
    b.stddev = std::sqrt(ss / static_cast<double>(costs.size() - 1));
    b.upper = b.mean + normal_upper_quantile(alpha) * b.stddev / std::sqrt(static_cast<double>(costs.size()));
    return b;
}

StopReason check_termination(const BoundsLog& log, const TrainerConfig& c) {
    const int k = log.iterations();
    if (k == 0) return StopReason::Continue;
    if (c.gap_tol >= 0.0 && !log.forward_upper.empty()) {
        const double ub = log.forward_upper.back();
        if (std::isfinite(ub) && ub - log.lower_bound.back() <= c.gap_tol) return StopReason::GapClosed;
    }
    if (k > c.stall_window) {
        bool stalled = true;
        for (int i = k - c.stall_window; i < k; ++i) {
            const auto u = static_cast<std::size_t>(i);
            stalled = stalled && (log.lower_bound[u] - log.lower_bound[u - 1] < c.stall_eps);
        }
        if (stalled) return StopReason::BoundStall;
    }
    if (k >= c.max_iters) return StopReason::MaxIter;
    return StopReason::Continue;
}

PathResult simulate_path(const StageModel& model, const CutPool& cuts, const std::vector<double>& moisture,
                         std::vector<double> state, int period) {
    const int T = model.num_stages();
    if (static_cast<int>(moisture.size()) != T) throw std::invalid_argument("moisture path length differs from stage count");
    PathResult r;
    for (int t = 0; t < T; ++t) {
        const int pt = period > 0 ? t % period : t;
        const bool terminal = t == T - 1 || (period > 0 && pt == period - 1);
        const auto real = model.realize(t, moisture[static_cast<std::size_t>(t)]);
        auto out = cuts.read(pt, [&](std::span<const Cut> cs) { return solve_stage(model, real, state, cs, terminal); });
        r.cost += out.immediate_cost;
        r.stage_cost.push_back(out.immediate_cost);
        r.shortfall.push_back(out.shortfall);
        r.delivered.push_back(out.delivered);
        r.demand.push_back(real.demand);
        r.clamps += out.clamped ? 1 : 0;
        state = out.state;
        r.states.push_back(std::move(out.state));
    }
    return r;
}

ForwardResult forward_pass(const StageModel& model, const CutPool& cuts, const std::vector<std::vector<double>>& paths,
                           int workers) {
    ForwardResult f;
    f.paths.resize(paths.size());
    const auto init = model.initial_state();
    parallel_for(static_cast<int>(paths.size()), workers, [&](int p) {
        f.paths[static_cast<std::size_t>(p)] = simulate_path(model, cuts, paths[static_cast<std::size_t>(p)], init);
    });
    return f;
}

void backward_pass(const StageModel& model, const RealizationGrid& grid, CutPool& cuts, const ForwardResult& forward,
                   int iteration, int workers) {
    const int T = model.num_stages();
    const int ns = model.num_states();
    for (int t = T - 1; t >= 1; --t) {
        const bool terminal = t == T - 1;
        const auto& ms = grid.moisture[static_cast<std::size_t>(t)];
        std::vector<StageRealization> reals;
        for (double m : ms) reals.push_back(model.realize(t, m));
        std::vector<Cut> new_cuts;
        for (const auto& path : forward.paths) {
            const auto& trial = path.states[static_cast<std::size_t>(t - 1)];
            std::vector<CutIngredients> ing(reals.size());
            cuts.read(t, [&](std::span<const Cut> cs) {
                parallel_for(static_cast<int>(reals.size()), workers, [&](int j) {
                    auto out = solve_stage(model, reals[static_cast<std::size_t>(j)], trial, cs, terminal);
                    if (out.clamped) {
                        throw StageInfeasible("stage " + std::to_string(t) +
                                              " needed an inventory clamp during the backward pass");
                    }
                    ing[static_cast<std::size_t>(j)] = std::move(out.ingredients);
                });
            });
            double value = 0.0;
            std::vector<double> grad(static_cast<std::size_t>(ns), 0.0);
            for (const auto& x : ing) {
                value += x.value;
                for (int k = 0; k < ns; ++k) grad[static_cast<std::size_t>(k)] += x.gradient[static_cast<std::size_t>(k)];
            }
            const double n = static_cast<double>(ing.size());
            value /= n;
            for (auto& g : grad) g /= n;
            new_cuts.push_back(make_cut(value, grad, trial, iteration));
        }
        for (auto& c : new_cuts) cuts.append(t - 1, std::move(c));
    }
}

double lower_bound(const StageModel& model, const CutPool& cuts) {
    const auto real = model.realize_mean(0);
    const auto init = model.initial_state();
    const bool terminal = model.num_stages() == 1;
    auto out = cuts.read(0, [&](std::span<const Cut> cs) { return solve_stage(model, real, init, cs, terminal); });
    return out.solution.objective;
}

namespace {

std::vector<std::vector<double>> sample_paths(const RealizationGrid& grid, std::mt19937_64& rng, int n) {
    std::vector<std::vector<double>> paths;
    for (int p = 0; p < n; ++p) {
        std::vector<double> m;
        for (const auto& s : grid.moisture) m.push_back(s[static_cast<std::size_t>(uniform_index(rng, s.size()))]);
        paths.push_back(std::move(m));
    }
    return paths;
}

std::vector<std::vector<double>> all_paths(const RealizationGrid& grid) {
    std::vector<std::vector<double>> paths;
    const auto n = grid.path_count(std::numeric_limits<std::int32_t>::max());
    for (std::int64_t k = 0; k < n; ++k) paths.push_back(grid_path(grid, k));
    return paths;
}

}  // namespace

TrainResult train(const StageModel& model, const TrainerConfig& config) {
    config.validate();
    TrainResult res;
    auto& policy = res.policy;
    auto& log = res.log;
    policy.plan = model.plan();
    policy.grid = sample_grid(model, config.realizations, config.seed);
    policy.cuts = CutPool(model.num_stages(), model.num_states());
    policy.fingerprint = fingerprint(model, config);
    policy.seed = config.seed;

    const bool exhaustive =
        config.exhaustive_forward && policy.grid.path_count(config.enumerate_cap) <= config.enumerate_cap;
    const auto every_path = exhaustive ? all_paths(policy.grid) : std::vector<std::vector<double>>{};

    for (int it = 1;; ++it) {
        std::vector<std::vector<double>> paths;
        if (exhaustive) {
            paths = every_path;
        } else {
            auto rng = derived_rng(config.seed, kForwardStream, static_cast<std::uint64_t>(it));
            paths = sample_paths(policy.grid, rng, config.forward_paths);
        }
        const auto fwd = forward_pass(model, policy.cuts, paths, config.workers);
        std::vector<double> costs;
        for (const auto& p : fwd.paths) costs.push_back(p.cost);
        const auto sb = statistical_upper_bound(costs, config.alpha);
        log.forward_mean.push_back(sb.mean);
        log.forward_variance.push_back(sb.stddev * sb.stddev);
        log.forward_upper.push_back(exhaustive ? sb.mean : sb.upper);

        backward_pass(model, policy.grid, policy.cuts, fwd, it, config.workers);
        log.lower_bound.push_back(lower_bound(model, policy.cuts));

        log.stop = check_termination(log, config);
        if (log.stop != StopReason::Continue) break;
    }

    // Final upper bound: enumerate the grid when small, otherwise sample.
    std::vector<std::vector<double>> paths;
    if (policy.grid.path_count(config.enumerate_cap) <= config.enumerate_cap) {
        paths = all_paths(policy.grid);
        log.final_bound_exact = true;
    } else {
        auto rng = derived_rng(config.seed, kBoundStream);
        paths = sample_paths(policy.grid, rng, config.bound_paths);
    }
    const auto fwd = forward_pass(model, policy.cuts, paths, config.workers);
    std::vector<double> costs;
    for (const auto& p : fwd.paths) costs.push_back(p.cost);
    if (costs.size() == 1) costs.push_back(costs.front());
    log.final_bound = statistical_upper_bound(costs, config.alpha);
    return res;
}

void save_policy(const Policy& policy, std::ostream& out) {
    out << "biofeed-policy 1\n";
    out << "fingerprint " << policy.fingerprint << " seed " << policy.seed << "\n";
    out << "plan " << policy.plan.size() << "\n";
    for (const auto& s : policy.plan.stages) {
        out << level_code(s.level) << ' ' << format_double(s.beta) << ' ' << s.first_bale << ' ' << s.bales << "\n";
    }
    out << "grid " << policy.grid.num_stages() << "\n";
    for (const auto& row : policy.grid.moisture) {
        out << row.size();
        for (double m : row) out << ' ' << format_double(m);
        out << "\n";
    }
    write_cuts(policy.cuts, out);
}

Policy load_policy(std::istream& in, const std::string& expected_fingerprint) {
    auto fail = [](const std::string& msg) { throw std::runtime_error("policy file: " + msg); };
    std::string line, word;
    if (!std::getline(in, line) || line != "biofeed-policy 1") fail("expected header 'biofeed-policy 1'");
    Policy p;
    if (!(in >> word >> p.fingerprint) || word != "fingerprint") fail("missing fingerprint");
    if (!(in >> word >> p.seed) || word != "seed") fail("missing seed");
    if (p.fingerprint != expected_fingerprint) {
        throw FingerprintMismatch("policy file: fingerprint " + p.fingerprint + " does not match the instance (" +
                                  expected_fingerprint + "); the policy was trained on different inputs");
    }
    int n = 0;
    if (!(in >> word >> n) || word != "plan" || n < 0) fail("missing plan section");
    for (int t = 0; t < n; ++t) {
        std::string code, beta;
        StageInfo s{};
        if (!(in >> code >> beta >> s.first_bale >> s.bales)) fail("truncated plan");
        s.level = parse_level(code);
        s.beta = std::stod(beta);
        p.plan.stages.push_back(s);
    }
    if (!(in >> word >> n) || word != "grid" || n < 0) fail("missing grid section");
    for (int t = 0; t < n; ++t) {
        std::size_t k = 0;
        if (!(in >> k)) fail("truncated grid");
        std::vector<double> row;
        for (std::size_t j = 0; j < k; ++j) {
            std::string tok;
            if (!(in >> tok)) fail("truncated grid");
            row.push_back(std::stod(tok));
        }
        p.grid.moisture.push_back(std::move(row));
    }
    std::getline(in, line);
    p.cuts = read_cuts(in);
    return p;
}

}  // namespace biofeed
