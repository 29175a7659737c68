// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "biofeed/cli/experiment.hpp"
#include "biofeed/physics/physics.hpp"
#include "biofeed/util/parallel.hpp"
#include "support/instances.hpp"
#include "support/lp_oracle.hpp"
#include "support/trees.hpp"

namespace fs = std::filesystem;
using namespace biofeed;
using testing::de_optimum;
using testing::exact_trainer;
using testing::tiny_case;
using L = MoistureLevel;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const std::string& what) {
    std::fprintf(stderr, "... %s\n", what.c_str());
    std::fflush(stderr);
}

// Every training log seen in this run, for the bound-sandwich check.
struct NamedLog {
    std::string name;
    std::vector<double> lower;
    double upper;
};
std::vector<NamedLog> g_logs;

void keep_log(const std::string& name, const BoundsLog& log) {
    g_logs.push_back({name, log.lower_bound, log.final_bound.upper});
}

bool overlap(double a_lo, double a_hi, double b_lo, double b_hi) { return a_lo <= b_hi && b_lo <= a_hi; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Data rows of an artifact CSV (header comment and column line skipped).
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    int n = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n++ < 2) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        rows.push_back(std::move(f));
    }
    return rows;
}

Outcome oracle_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    int bad = 0;
    for (std::uint64_t seed = 1001; seed <= 1020; ++seed) {
        const auto tc = tiny_case(seed);
        const auto r = train(tc.model, exact_trainer(tc.realizations, seed));
        keep_log(fmt("tiny instance %d", static_cast<int>(seed)), r.log);
        const double err = std::abs(r.log.lower_bound.back() - de_optimum(tc.model, r.policy.grid));
        worst = std::max(worst, std::isfinite(err) ? err : 1e300);
        if (!(err <= 1e-6)) ++bad;
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 30.0,
            fmt("20 instances, %d off, worst |LB - DE| %.3g, %.1f s (limit 30 s)", bad, worst, secs)};
}

Outcome zero_cost(std::map<double, Comparison>& all_low) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (double r : {2.95, 2.72, 2.50}) {
        Instance inst = default_instance();
        inst.scenario.mix = PerLevel<double>{{1.0, 0.0, 0.0}};
        inst.scenario.target_rate = r;
        const auto model = StageModel::from_instance(inst);
        auto cfg = TrainerConfig::from(inst.run, 1);
        const auto tr = train(model, cfg);
        keep_log(fmt("all-low r=%.2f", r), tr.log);
        const auto paths = validation_paths(model, inst.run.validation_paths, 1, inst.run.validation_seed_offset);
        const auto ev = simulate_policy(model, tr.policy, paths);
        const double lb = tr.log.lower_bound.back();
        const bool here = std::abs(lb) <= 1e-9 && ev.mean == 0.0 && ev.ci_lower == 0.0 && ev.ci_upper == 0.0 &&
                          ev.infeasible == 0;
        ok = ok && here;
        detail += fmt("r=%.2f LB %.3g mean %.3g CI [%.3g, %.3g]; ", r, lb, ev.mean, ev.ci_lower, ev.ci_upper);
        if (r == 2.95) all_low[r] = run_comparison(inst, 1, 1);
    }
    const double secs = seconds_since(t0);
    return {ok && secs < 60.0, detail + fmt("%.1f s (limit 60 s)", secs)};
}

Outcome homogeneous(const Comparison& low) {
    Instance inst = default_instance();
    inst.scenario.mix = PerLevel<double>{{0.0, 0.0, 1.0}};
    const auto high = run_comparison(inst, 1, 1);
    keep_log("all-high", high.multi_stage.log);
    keep_log("all-low (compare)", low.multi_stage.log);
    bool ok = true;
    std::string detail;
    for (const auto* c : {&low, &high}) {
        const auto& g = c->gaps;
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = i + 1; j < g.size(); ++j) {
                ok = ok && overlap(g[i].ci_lower, g[i].ci_upper, g[j].ci_lower, g[j].ci_upper);
            }
            ok = ok && g[i].infeasible == 0;
        }
        detail += fmt("%s: ", c == &low ? "all-low" : "all-high");
        for (const auto& r : g) detail += fmt("%s [%.4f, %.4f] ", r.model.c_str(), r.ci_lower, r.ci_upper);
    }
    return {ok, detail};
}

Outcome restriction() {
    int bad = 0;
    int finite_mv = 0;
    double worst = -1e300;
    std::mt19937_64 rng(4242);
    for (int k = 0; k < 10; ++k) {
        std::vector<MoistureLevel> seq;
        const int T = 3 + static_cast<int>(uniform_index(rng, 2));
        for (int t = 0; t < T; ++t) seq.push_back(kAllLevels[uniform_index(rng, 3)]);
        const auto m = testing::reference_model(seq, 2.5 + unit_uniform(rng));
        const auto g = testing::random_grid(m, 2 + static_cast<int>(uniform_index(rng, 2)), rng);
        const auto paths = testing::tree_paths(g);
        const double de = de_optimum(m, g);
        const auto ts = solve_two_stage(m, paths);
        const double mv = testing::static_cost(m, paths, solve_mean_value(m).plan);
        if (std::isfinite(mv)) ++finite_mv;
        worst = std::max({worst, de - ts.objective, ts.objective - mv});
        if (!(de <= ts.objective + 1e-7 && ts.objective <= mv + 1e-7)) ++bad;
    }
    return {bad == 0, fmt("10 trees, %d violations, worst excess %.3g (slack 1e-7), MV plan feasible on %d", bad,
                          worst, finite_mv)};
}

Outcome cut_validity() {
    const auto tc = tiny_case(2024);
    const auto r = train(tc.model, exact_trainer(tc.realizations, 2024));
    keep_log("cut-validity instance", r.log);
    std::mt19937_64 rng(7);
    const int T = tc.model.num_stages();
    int violations = 0;
    int checked = 0;
    double worst = -1e300;
    for (int k = 0; k < 100; ++k) {
        const int t = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(T - 1)));
        const double cap = tc.model.realize_mean(t).capacity[0];
        const std::vector<double> x{cap * unit_uniform(rng)};
        const double exact = de_optimum(tc.model, r.policy.grid, t + 1, x);
        for (const auto& c : r.policy.cuts.snapshot(t)) {
            ++checked;
            const double excess = c.evaluate(x) - exact;
            worst = std::max(worst, excess);
            if (excess > 1e-6) ++violations;
        }
    }
    return {violations == 0 && checked > 0,
            fmt("%d stages, 100 states, %d cut evaluations, %d violations, worst excess %.3g", T, checked,
                violations, worst)};
}

Outcome lp_kernel() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(99);
    int bad = 0;
    int optimal = 0;
    double worst_obj = 0.0;
    double worst_cs = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto prob = testing::random_small_lp(rng);
        const auto sol = lp::solve(prob);
        const auto oracle = testing::vertex_enumeration_min(prob);
        if (!oracle) {
            if (sol.status != lp::Status::Infeasible) ++bad;
            continue;
        }
        if (!sol.optimal()) {
            ++bad;
            continue;
        }
        ++optimal;
        const auto check = testing::check_duality(prob, sol);
        const double err = std::abs(sol.objective - *oracle);
        worst_obj = std::max(worst_obj, err);
        worst_cs = std::max(worst_cs, check.complementary_slackness);
        if (err > 1e-6 || check.complementary_slackness > 1e-7) ++bad;
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 10.0,
            fmt("1000 LPs (%d optimal), %d disagreements, worst |obj| %.3g, worst CS %.3g, %.2f s (limit 10 s)",
                optimal, bad, worst_obj, worst_cs, secs)};
}

Outcome physics_spots() {
    const Physics ph;
    int bad = 0;
    int checks = 0;
    // Regression coefficients and particle-size medians, hand-entered.
    const double rho50_g1[] = {1.95, 2.35, 1.75};
    const double rho50_g2[] = {0.65, 0.70, 0.60};
    for (int k = 0; k < 3; ++k) {
        const auto lvl = kAllLevels[static_cast<std::size_t>(k)];
        for (double m : {0.03, 0.075, 0.12, 0.16, 0.2, 0.25, 0.3}) {
            const double d1 = 56.183 + 65.312 * m - 8.473 * rho50_g1[k];
            const double d2 = 186.348 + 206.1697 * m - 110.302 * rho50_g2[k];
            checks += 2;
            if (std::abs(ph.density_after_grinder(1, m, lvl) - d1) > 1e-9) ++bad;
            if (std::abs(ph.density_after_grinder(2, m, lvl) - d2) > 1e-9) ++bad;
        }
    }
    const double bypass[] = {0.857, 0.811, 0.928};
    for (int k = 0; k < 3; ++k) {
        for (double mass : {1.0, 2.0, 0.37}) {
            const auto [b, g] = ph.bypass_split(mass, kAllLevels[static_cast<std::size_t>(k)]);
            ++checks;
            if (b != bypass[k] * mass || g != mass - bypass[k] * mass) ++bad;
        }
    }
    struct Row {
        const char* id;
        double moisture[3];
        double dry_matter[3];
    };
    const Row rows[] = {{"grinder1", {0.5, 3.0, 4.77}, {1.5, 1.5, 1.5}},
                        {"grinder2", {0.7, 3.0, 4.0}, {0.5, 0.5, 0.5}},
                        {"pellet_mill", {0.0, 1.5, 3.9}, {0.0, 0.0, 0.0}}};
    for (const auto& row : rows) {
        for (int k = 0; k < 3; ++k) {
            for (double m : {0.05, 0.16, 0.25}) {
                const auto s = ph.apply_losses(1.0, m, row.id, kAllLevels[static_cast<std::size_t>(k)]);
                ++checks;
                if (s.mass != 1.0 * (1.0 - row.dry_matter[k] / 100.0) ||
                    s.moisture != std::max(0.0, m - row.moisture[k] / 100.0)) {
                    ++bad;
                }
            }
        }
    }
    // Worked rows.
    const auto g1 = ph.apply_losses(1.0, 0.25, "grinder1", L::High);
    const auto pm = ph.apply_losses(1.0, 0.05, "pellet_mill", L::Low);
    const auto [b2, r2] = ph.bypass_split(2.0, L::High);
    checks += 3;
    if (std::abs(g1.mass - 0.985) > 1e-12 || std::abs(g1.moisture - 0.2023) > 1e-12) ++bad;
    if (pm.mass != 1.0 || pm.moisture != 0.05) ++bad;
    if (std::abs(b2 - 1.856) > 1e-12 || std::abs(r2 - 0.144) > 1e-12) ++bad;
    return {bad == 0, fmt("%d checks, %d mismatches", checks, bad)};
}

struct BaseCase {
    fs::path dir_a;
    fs::path dir_b;
    int status_a = -1;
    int status_b = -1;
    double seconds = 0.0;
};

ExperimentSpec base_spec(const fs::path& out) {
    ExperimentSpec s;
    s.command = Command::Compare;
    s.config = fs::path(BIOFEED_SOURCE_DIR) / "configs" / "base_case.yaml";
    s.out = out;
    s.seed = 1;
    s.workers = workers_from_env(1);
    return s;
}

Outcome ordering(const BaseCase& bc) {
    if (bc.status_a != kExitOk) return {false, fmt("compare exited with %d", bc.status_a)};
    const auto rows = csv_rows(bc.dir_a / "compare.csv");
    std::map<std::string, std::vector<double>> by;
    for (const auto& r : rows) by[r[0]] = {std::stod(r[1]), std::stod(r[2]), std::stod(r[3]), std::stod(r[6])};
    const auto& ms = by["multi-stage"];
    const auto& ts = by["two-stage"];
    const auto& mv = by["mean-value"];
    if (ms.empty() || ts.empty() || mv.empty()) return {false, "compare.csv lacks a model row"};
    const bool ok = ms[0] < ts[0] && ts[0] < mv[0] && ms[2] < ts[1] && ts[2] < mv[1] && ms[3] == 0 && ts[3] == 0 &&
                    mv[3] == 0 && bc.seconds <= 900.0;
    return {ok, fmt("multi-stage %.4f [%.4f, %.4f] < two-stage %.4f [%.4f, %.4f] < mean-value %.4f [%.4f, %.4f]; "
                    "compare %.0f s (limit 900 s)",
                    ms[0], ms[1], ms[2], ts[0], ts[1], ts[2], mv[0], mv[1], mv[2], bc.seconds)};
}

Outcome cyclic(const BaseCase& bc) {
    if (bc.status_a != kExitOk) return {false, fmt("compare exited with %d", bc.status_a)};
    std::vector<double> inv;
    for (const auto& r : csv_rows(bc.dir_a / "trajectories.csv")) {
        if (r[0] == "multi-stage" && r[2] == "mean_inventory") inv.push_back(std::stod(r[3]));
    }
    const auto n = inv.size();
    if (n < 20) return {false, "trajectory too short"};
    double mean = 0.0;
    for (double v : inv) mean += v / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : inv) c0 += (v - mean) * (v - mean);
    int best_lag = 0;
    double best = -2.0;
    for (std::size_t lag = 1; lag <= 12; ++lag) {
        double c = 0.0;
        for (std::size_t t = lag; t < n; ++t) c += (inv[t] - mean) * (inv[t - lag] - mean);
        const double acf = c / c0;
        if (acf > best) {
            best = acf;
            best_lag = static_cast<int>(lag);
        }
    }
    const double peak = *std::max_element(inv.begin(), inv.end());
    const bool ok = best_lag == 5 && inv.back() < 0.01 * peak;
    return {ok, fmt("autocorrelation peak at lag %d (%.3f), final mean inventory %.3g vs peak %.4f", best_lag, best,
                    inv.back(), peak)};
}

Outcome truncation(const BaseCase& bc) {
    if (bc.status_a != kExitOk) return {false, fmt("compare exited with %d", bc.status_a)};
    Instance inst = load_instance(base_spec(bc.dir_a).config);
    const auto model = StageModel::from_instance(inst);
    const auto cfg = TrainerConfig::from(inst.run, 1);
    std::ifstream in(bc.dir_a / "policy.txt");
    const auto full = load_policy(in, fingerprint(model, cfg));
    Instance short_inst = inst;
    short_inst.scenario.horizon_bales = 10;
    const auto short_model = StageModel::from_instance(short_inst);
    const auto tr = train(short_model, TrainerConfig::from(short_inst.run, 1));
    keep_log("10-stage policy", tr.log);
    const auto paths = validation_paths(model, inst.run.validation_paths, 1, inst.run.validation_seed_offset);
    const auto rep = truncate_and_repeat(model, tr.policy, paths);
    const auto ms = simulate_policy(model, full, paths);
    const auto d = paired_difference(rep, ms);
    return {d.ci_lower > 0.0 && d.pairs == static_cast<int>(paths.size()),
            fmt("5 x 10-stage %.4f vs 50-stage %.4f, paired difference %.4f [%.4f, %.4f] over %d paths", rep.mean,
                ms.mean, d.mean, d.ci_lower, d.ci_upper, d.pairs)};
}

Outcome determinism(const BaseCase& bc) {
    if (bc.status_a != kExitOk || bc.status_b != kExitOk) {
        return {false, fmt("compare exited with %d and %d", bc.status_a, bc.status_b)};
    }
    int files = 0;
    int differ = 0;
    for (const auto& e : fs::directory_iterator(bc.dir_a)) {
        if (e.path().extension() != ".csv" || e.path().filename() == "runtime.csv") continue;
        ++files;
        if (slurp(e.path()) != slurp(bc.dir_b / e.path().filename())) ++differ;
    }
    return {files >= 4 && differ == 0, fmt("%d CSVs compared (timing file excluded), %d differ", files, differ)};
}

Outcome sandwich() {
    int bad = 0;
    std::string first;
    for (const auto& l : g_logs) {
        bool ok = !l.lower.empty();
        for (std::size_t k = 1; k < l.lower.size(); ++k) ok = ok && l.lower[k] >= l.lower[k - 1] - 1e-9;
        ok = ok && l.lower.back() <= l.upper;
        if (!ok) {
            ++bad;
            if (first.empty()) first = " first: " + l.name;
        }
    }
    return {bad == 0 && !g_logs.empty(),
            fmt("%d training runs, %d with a decreasing trace or LB above the statistical UB%s",
                static_cast<int>(g_logs.size()), bad, first.c_str())};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    std::map<int, std::pair<std::string, Outcome>> results;
    const auto check = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
        progress(name);
        try {
            results[id] = {name, f()};
        } catch (const std::exception& e) {
            results[id] = {name, {false, std::string("threw: ") + e.what()}};
        }
    };

    check(10, "LP kernel vs vertex enumeration", lp_kernel);
    check(11, "physics spot checks", physics_spots);
    check(1, "oracle exactness on tiny trees", oracle_exactness);
    check(6, "restriction inequality DE <= TS <= MV", restriction);
    check(7, "cut validity at random states", cut_validity);
    std::map<double, Comparison> all_low;
    check(3, "zero-cost all-low fleets", [&] { return zero_cost(all_low); });
    check(4, "homogeneous-fleet degeneracy", [&] {
        if (!all_low.count(2.95)) return Outcome{false, "all-low comparison missing"};
        return homogeneous(all_low.at(2.95));
    });

    BaseCase bc;
    const auto root = fs::temp_directory_path() / "biofeed_acceptance";
    fs::remove_all(root);
    bc.dir_a = root / "a";
    bc.dir_b = root / "b";
    progress("base-case compare, first run");
    auto t0 = std::chrono::steady_clock::now();
    bc.status_a = run(base_spec(bc.dir_a));
    bc.seconds = seconds_since(t0);
    check(5, "base-case model ordering", [&] { return ordering(bc); });
    check(8, "cyclic inventory and end-of-horizon drawdown", [&] { return cyclic(bc); });
    check(9, "truncate-and-repeat dominance", [&] { return truncation(bc); });
    progress("base-case compare, second run");
    bc.status_b = run(base_spec(bc.dir_b));
    check(12, "byte-identical repeated compare", [&] { return determinism(bc); });
    if (bc.status_a == kExitOk) {
        std::vector<double> lb;
        for (const auto& r : csv_rows(bc.dir_a / "bounds.csv")) lb.push_back(std::stod(r[1]));
        const auto summary = csv_rows(bc.dir_a / "train_summary.csv");
        if (!summary.empty()) g_logs.push_back({"base case", lb, std::stod(summary[0][5])});
    }
    check(2, "bound sandwich", sandwich);

    int failed = 0;
    for (const auto& [id, r] : results) {
        std::printf("%s %2d %s: %s\n", r.second.pass ? "PASS" : "FAIL", id, r.first.c_str(), r.second.detail.c_str());
        if (!r.second.pass) ++failed;
    }
    std::printf("%d/%d criteria passed\n", static_cast<int>(results.size()) - failed, static_cast<int>(results.size()));
    return failed == 0 ? 0 : 1;
}
