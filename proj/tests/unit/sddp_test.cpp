#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "biofeed/sddp/sddp.hpp"
#include "support/instances.hpp"
#include "support/trees.hpp"

namespace biofeed {
namespace {

using L = MoistureLevel;
using testing::de_optimum;
using testing::exact_trainer;
using testing::reference_model;
using testing::tiny_case;

BoundsLog trace(std::vector<double> lb) {
    BoundsLog log;
    log.lower_bound = std::move(lb);
    log.forward_upper.assign(log.lower_bound.size(), lp::kInfinity);
    return log;
}

TEST(StatisticalBound, ZeroVariance) {
    const auto b = statistical_upper_bound({10.0, 10.0, 10.0}, 0.025);
    EXPECT_EQ(b.mean, 10.0);
    EXPECT_EQ(b.upper, 10.0);
    EXPECT_FALSE(b.infinite_width);
}

TEST(StatisticalBound, HandArithmetic) {
    const auto b = statistical_upper_bound({1.0, 2.0, 3.0}, 0.025);
    EXPECT_DOUBLE_EQ(b.mean, 2.0);
    EXPECT_DOUBLE_EQ(b.stddev, 1.0);
    EXPECT_NEAR(b.upper, 2.0 + 1.959964 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(b.upper, 3.13161, 1e-4);
}

TEST(StatisticalBound, SingleSampleHasInfiniteWidth) {
    const auto b = statistical_upper_bound({4.0}, 0.025);
    EXPECT_EQ(b.mean, 4.0);
    EXPECT_TRUE(b.infinite_width);
    EXPECT_TRUE(std::isinf(b.upper));
}

TEST(StatisticalBound, UpperNeverBelowMean) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> c;
        for (int j = 0; j < 2 + k; ++j) c.push_back(100.0 * unit_uniform(rng));
        const auto b = statistical_upper_bound(c, 0.025);
        EXPECT_GE(b.upper, b.mean);
    }
}

TEST(StatisticalBound, Quantiles) {
    EXPECT_EQ(normal_upper_quantile(0.025), 1.959964);
    EXPECT_NEAR(normal_upper_quantile(0.05), 1.6448536, 1e-6);
    EXPECT_NEAR(normal_upper_quantile(0.005), 2.5758293, 1e-6);
}

TEST(Termination, FlatTraceStalls) {
    TrainerConfig c;
    c.stall_window = 10;
    EXPECT_EQ(check_termination(trace(std::vector<double>(11, 3.0)), c), StopReason::BoundStall);
    EXPECT_EQ(check_termination(trace(std::vector<double>(10, 3.0)), c), StopReason::Continue);
}

TEST(Termination, ImprovingTraceContinues) {
    TrainerConfig c;
    c.stall_window = 10;
    std::vector<double> lb;
    for (int k = 0; k < 40; ++k) lb.push_back(k);
    EXPECT_EQ(check_termination(trace(lb), c), StopReason::Continue);
}

TEST(Termination, SmallImprovementsStall) {
    TrainerConfig c;
    c.stall_window = 5;
    c.stall_eps = 1e-4;
    std::vector<double> lb{1.0, 2.0};
    for (int k = 0; k < 5; ++k) lb.push_back(lb.back() + 5e-5);
    EXPECT_EQ(check_termination(trace(lb), c), StopReason::BoundStall);
    lb.back() += 1e-3;
    EXPECT_EQ(check_termination(trace(lb), c), StopReason::Continue);
}

TEST(Termination, ZeroGapCloses) {
    TrainerConfig c;
    c.gap_tol = 0.0;
    auto log = trace({1.0, 2.0});
    log.forward_upper.back() = 2.0;
    EXPECT_EQ(check_termination(log, c), StopReason::GapClosed);
    c.gap_tol = -1.0;
    EXPECT_EQ(check_termination(log, c), StopReason::Continue);
}

TEST(Termination, IterationCap) {
    TrainerConfig c;
    c.max_iters = 3;
    EXPECT_EQ(check_termination(trace({1.0, 2.0, 3.0}), c), StopReason::MaxIter);
}

TEST(TrainerConfig, Validation) {
    TrainerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.alpha = 0.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.realizations = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.stall_eps = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Grid, StageZeroAtMean) {
    auto m = reference_model({L::High, L::Med, L::Low});
    const auto g = sample_grid(m, 7, 3);
    ASSERT_EQ(g.num_stages(), 3);
    EXPECT_EQ(g.moisture[0], std::vector<double>{0.25});
    EXPECT_EQ(g.moisture[1].size(), 7u);
    for (double v : g.moisture[1]) EXPECT_TRUE(m.moisture().range(L::Med).contains(v));
    EXPECT_EQ(g.path_count(1000), 49);
    EXPECT_EQ(g.path_count(10), 11);
    const auto p = grid_path(g, 8);
    EXPECT_EQ(p[1], g.moisture[1][1]);
    EXPECT_EQ(p[2], g.moisture[2][1]);
}

TEST(Train, DeterministicMatchesExtensiveForm) {
    auto m = reference_model({L::High, L::Med, L::Low, L::Low, L::High, L::Med});
    auto c = exact_trainer(1, 2);
    const auto r = train(m, c);
    const double de = de_optimum(m, r.policy.grid);
    EXPECT_NEAR(r.log.lower_bound.back(), de, 1e-6);
    // One path, no randomness: the simulated cost equals the bound.
    const auto p = simulate_path(m, r.policy.cuts, grid_path(r.policy.grid, 0), m.initial_state());
    EXPECT_NEAR(p.cost, r.log.lower_bound.back(), 1e-6);
    EXPECT_NEAR(r.log.final_bound.mean, r.log.lower_bound.back(), 1e-6);
    EXPECT_EQ(r.log.final_bound.stddev, 0.0);
}

TEST(Train, TwoStagesTwoRealizations) {
    auto m = reference_model({L::Med, L::High});
    const auto r = train(m, exact_trainer(2, 4));
    ASSERT_EQ(r.policy.grid.path_count(100), 2);
    EXPECT_NEAR(r.log.lower_bound.back(), de_optimum(m, r.policy.grid), 1e-6);
}

TEST(Train, TinyInstancesMatchTheTree) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto tc = tiny_case(seed);
        const auto r = train(tc.model, exact_trainer(tc.realizations, seed));
        const double de = de_optimum(tc.model, r.policy.grid);
        EXPECT_NEAR(r.log.lower_bound.back(), de, 1e-6) << "seed " << seed;
        EXPECT_LE(r.log.lower_bound.back(), r.log.final_bound.mean + 1e-9) << "seed " << seed;
        EXPECT_TRUE(r.log.final_bound_exact);
    }
}

TEST(Train, LowerBoundMonotoneAndBelowUpper) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 10;
    auto m = StageModel::from_instance(inst);
    TrainerConfig c;
    c.realizations = 10;
    c.max_iters = 40;
    c.seed = 9;
    const auto r = train(m, c);
    ASSERT_EQ(r.log.iterations(), 40);
    EXPECT_EQ(r.log.stop, StopReason::MaxIter);
    for (int k = 1; k < r.log.iterations(); ++k) {
        EXPECT_GE(r.log.lower_bound[static_cast<std::size_t>(k)], r.log.lower_bound[static_cast<std::size_t>(k - 1)] - 1e-9);
    }
    EXPECT_LE(r.log.lower_bound.back(), r.log.final_bound.upper);
    EXPECT_FALSE(r.log.final_bound_exact);
    EXPECT_EQ(r.log.final_bound.samples, c.bound_paths);
}

TEST(Train, AllLowCostsNothing) {
    auto m = reference_model(std::vector<MoistureLevel>(10, L::Low));
    TrainerConfig c;
    c.realizations = 10;
    c.stall_window = 5;
    const auto r = train(m, c);
    EXPECT_EQ(r.log.stop, StopReason::BoundStall);
    EXPECT_NEAR(r.log.lower_bound.back(), 0.0, 1e-12);
    EXPECT_NEAR(r.log.final_bound.mean, 0.0, 1e-12);
}

TEST(Train, Reproducible) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 10;
    auto m = StageModel::from_instance(inst);
    TrainerConfig c;
    c.realizations = 5;
    c.forward_paths = 3;
    c.max_iters = 15;
    c.bound_paths = 20;
    const auto a = train(m, c);
    c.workers = 3;
    const auto b = train(m, c);
    EXPECT_EQ(a.log.lower_bound, b.log.lower_bound);
    EXPECT_EQ(a.log.forward_mean, b.log.forward_mean);
    EXPECT_EQ(a.log.final_bound.mean, b.log.final_bound.mean);
    EXPECT_TRUE(a.policy.cuts == b.policy.cuts);
    EXPECT_EQ(a.policy.fingerprint, b.policy.fingerprint);
    c.seed = 2;
    EXPECT_NE(fingerprint(m, c), a.policy.fingerprint);
}

TEST(Passes, BackwardCutIsTightAtTrial) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 5;
    auto m = StageModel::from_instance(inst);
    const auto grid = sample_grid(m, 4, 1);
    CutPool cuts(m.num_stages(), m.num_states());
    for (int it = 1; it <= 3; ++it) {
        const auto fwd = forward_pass(m, cuts, {grid_path(grid, 7 * it)});
        for (const auto& states : fwd.paths[0].states) {
            for (std::size_t k = 0; k < states.size(); ++k) EXPECT_GE(states[k], 0.0);
        }
        backward_pass(m, grid, cuts, fwd, it);
        for (int t = 1; t < m.num_stages(); ++t) {
            const auto& trial = fwd.paths[0].states[static_cast<std::size_t>(t - 1)];
            double avg = 0.0;
            const bool terminal = t == m.num_stages() - 1;
            for (double x : grid.moisture[static_cast<std::size_t>(t)]) {
                const auto s = m.realize(t, x);
                avg += cuts.read(t, [&](auto cs) { return solve_stage(m, s, trial, cs, terminal).solution.objective; });
            }
            avg /= static_cast<double>(grid.moisture[static_cast<std::size_t>(t)].size());
            const auto last = cuts.snapshot(t - 1).back();
            EXPECT_EQ(last.iteration, it);
            // The downstream pool may have grown after this cut was made, so the
            // fresh average can only be higher.
            EXPECT_LE(last.evaluate(trial), avg + 1e-7);
            if (t == m.num_stages() - 1) EXPECT_NEAR(last.evaluate(trial), avg, 1e-7);
        }
    }
}

TEST(Passes, SingleRealizationCutIsTheSubproblemValue) {
    auto m = reference_model({L::High, L::Med, L::Low});
    RealizationGrid grid{{{0.25}, {0.15}, {0.09}}};
    CutPool cuts(3, 1);
    const auto fwd = forward_pass(m, cuts, {grid_path(grid, 0)});
    backward_pass(m, grid, cuts, fwd, 1);
    const auto& trial = fwd.paths[0].states[1];
    const auto s = solve_stage(m, m.realize(2, 0.09), trial, {}, true);
    EXPECT_NEAR(cuts.snapshot(1).back().evaluate(trial), s.solution.objective, 1e-9);
}

TEST(Passes, CutsUnderestimateTheTreeCostToGo) {
    const auto tc = tiny_case(77);
    const auto r = train(tc.model, exact_trainer(tc.realizations, 77));
    std::mt19937_64 rng(1);
    const int T = tc.model.num_stages();
    for (int k = 0; k < 30; ++k) {
        const int t = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(T - 1)));
        const double cap = tc.model.realize_mean(t).capacity[0];
        const std::vector<double> x{cap * unit_uniform(rng)};
        const double exact = de_optimum(tc.model, r.policy.grid, t + 1, x);
        for (const auto& c : r.policy.cuts.snapshot(t)) EXPECT_LE(c.evaluate(x), exact + 1e-6);
    }
}

TEST(Simulate, PeriodReplaysPools) {
    auto m = reference_model({L::High, L::Low, L::High, L::Low});
    CutPool cuts(4, 1);
    cuts.append(0, make_cut(1.0, std::vector<double>{0.0}, std::vector<double>{0.0}, 1));
    const std::vector<double> path{0.25, 0.075, 0.25, 0.075};
    const auto full = simulate_path(m, cuts, path, m.initial_state());
    const auto rep = simulate_path(m, cuts, path, m.initial_state(), 2);
    // Stage 2 replays pool 0, whose constant cut prices nothing but theta.
    EXPECT_EQ(rep.stage_cost.size(), 4u);
    EXPECT_NEAR(full.cost, rep.cost, 1e-9);
}

TEST(PolicyIo, RoundTripAndFingerprintGuard) {
    auto m = reference_model({L::High, L::Med, L::Low});
    const auto r = train(m, exact_trainer(2, 3));
    std::stringstream ss;
    save_policy(r.policy, ss);
    const std::string text = ss.str();
    std::istringstream in(text);
    const auto p = load_policy(in, r.policy.fingerprint);
    EXPECT_TRUE(p.cuts == r.policy.cuts);
    EXPECT_EQ(p.grid.moisture, r.policy.grid.moisture);
    EXPECT_EQ(p.plan.size(), r.policy.plan.size());
    std::stringstream again;
    save_policy(p, again);
    EXPECT_EQ(again.str(), text);
    std::istringstream bad(text);
    try {
        (void)load_policy(bad, "0000000000000000");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("fingerprint"), std::string::npos);
    }
}

}  // namespace
}  // namespace biofeed
