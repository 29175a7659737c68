#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "biofeed/eval/eval.hpp"
#include "support/instances.hpp"
#include "support/trees.hpp"

namespace biofeed {
namespace {

using L = MoistureLevel;
using testing::exact_trainer;
using testing::reference_model;

EvaluationReport report_with_costs(std::string name, const std::vector<double>& costs) {
    std::vector<PathRecord> recs;
    for (double c : costs) {
        PathRecord p;
        p.cost = c;
        recs.push_back(p);
    }
    return summarize(std::move(name), std::move(recs));
}

TEST(Summarize, TwoSidedInterval) {
    const auto r = report_with_costs("a", {1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(r.mean, 2.0);
    EXPECT_NEAR(r.ci_lower, 2.0 - 1.959964 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(r.ci_upper, 2.0 + 1.959964 / std::sqrt(3.0), 1e-12);
}

TEST(Summarize, InfeasiblePathsAreCountedNotAveraged) {
    std::vector<PathRecord> recs(4);
    recs[0].cost = 1.0;
    recs[1].cost = 3.0;
    recs[2].feasible = false;
    recs[2].cost = 1000.0;
    recs[3].cost = 2.0;
    const auto r = summarize("x", recs);
    EXPECT_EQ(r.infeasible, 1);
    EXPECT_EQ(r.feasible(), 3);
    EXPECT_DOUBLE_EQ(r.mean, 2.0);
}

TEST(Compare, IdenticalReportsHaveZeroGap) {
    const auto a = report_with_costs("a", {1.0, 2.0, 4.0});
    const auto rows = compare({a}, a);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].gap, 0.0);
    EXPECT_FALSE(rows[0].absolute);
}

TEST(Compare, PercentOfReferenceMidpoint) {
    const auto a = report_with_costs("two-stage", {128.35, 128.35});
    const auto ref = report_with_costs("multi-stage", {124.55, 124.55});
    const auto rows = compare({a}, ref);
    EXPECT_NEAR(rows[0].gap, (128.35 - 124.55) / 124.55 * 100.0, 1e-12);
    EXPECT_NEAR(rows[0].gap, 3.05, 0.01);
}

TEST(Compare, Antisymmetry) {
    const auto a = report_with_costs("a", {5.0, 7.0, 9.0});
    const auto b = report_with_costs("b", {3.0, 4.0, 8.0});
    const double ab = compare({a}, b)[0].gap;
    const double ba = compare({b}, a)[0].gap;
    EXPECT_NEAR(ab, -ba * a.mean / b.mean, 1e-12);
}

TEST(Compare, ZeroReferenceGivesAbsoluteGap) {
    const auto a = report_with_costs("a", {1.0, 3.0});
    const auto z = report_with_costs("z", {0.0, 0.0});
    const auto rows = compare({a}, z);
    EXPECT_TRUE(rows[0].absolute);
    EXPECT_DOUBLE_EQ(rows[0].gap, 2.0);
}

TEST(Compare, RejectsDifferentPathSets) {
    const auto a = report_with_costs("a", {1.0, 3.0});
    const auto b = report_with_costs("b", {1.0, 3.0, 4.0});
    EXPECT_THROW((void)compare({a}, b), std::invalid_argument);
}

TEST(Paired, DifferenceInterval) {
    const auto a = report_with_costs("a", {2.0, 3.0, 5.0});
    const auto b = report_with_costs("b", {1.0, 1.0, 2.0});
    const auto d = paired_difference(a, b);
    EXPECT_EQ(d.pairs, 3);
    EXPECT_DOUBLE_EQ(d.mean, 2.0);
    EXPECT_NEAR(d.ci_lower, 2.0 - 1.959964 / std::sqrt(3.0), 1e-12);
}

TEST(Csv, Rfc4180Quoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, SummaryLayout) {
    const auto a = report_with_costs("multi-stage", {1.0, 1.0});
    std::ostringstream os;
    write_summary_csv(os, compare({a}, a), "00ff", 7);
    EXPECT_EQ(os.str(),
              "# biofeed fingerprint 00ff seed 7\r\n"
              "model,mean,ci_lower,ci_upper,gap,gap_kind,infeasible\r\n"
              "multi-stage,1.0,1.0,1.0,0.0,percent,0\r\n");
}

TEST(Validation, PathsAreFreshAndDeterministic) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 5;
    auto m = StageModel::from_instance(inst);
    const auto a = validation_paths(m, 20, 1);
    const auto b = validation_paths(m, 20, 1);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, validation_paths(m, 20, 2));
    const auto grid = sample_grid(m, 20, 1);
    for (const auto& p : a) {
        EXPECT_EQ(p[0], m.moisture().mean(m.plan()[0].level));
        for (std::size_t t = 1; t < p.size(); ++t) {
            const auto& g = grid.moisture[t];
            EXPECT_EQ(std::find(g.begin(), g.end(), p[t]), g.end());
        }
    }
}

TEST(SimulatePolicy, AllLowCostsNothing) {
    auto m = reference_model(std::vector<MoistureLevel>(10, L::Low));
    TrainerConfig c;
    c.realizations = 5;
    c.stall_window = 3;
    const auto r = train(m, c);
    const auto rep = simulate_policy(m, r.policy, validation_paths(m, 50, 1));
    EXPECT_EQ(rep.mean, 0.0);
    EXPECT_EQ(rep.ci_lower, 0.0);
    EXPECT_EQ(rep.ci_upper, 0.0);
    EXPECT_EQ(rep.infeasible, 0);
}

TEST(SimulatePolicy, DeterministicInstanceHasZeroWidth) {
    Instance inst = default_instance();
    inst.moisture = MoistureModel(PerLevel<MoistureRange>{{{{0.075, 0.075}, {0.16, 0.16}, {0.25, 0.25}}}});
    inst.scenario.horizon_bales = 5;
    auto m = StageModel::from_instance(inst);
    const auto r = train(m, exact_trainer(1, 1));
    const auto rep = simulate_policy(m, r.policy, validation_paths(m, 30, 1));
    EXPECT_EQ(rep.stddev, 0.0);
    EXPECT_EQ(rep.ci_lower, rep.ci_upper);
    EXPECT_NEAR(rep.mean, r.log.lower_bound.back(), 1e-6);
}

TEST(SimulatePolicy, ShortfallAccountingMatchesCost) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 10;
    auto m = StageModel::from_instance(inst);
    TrainerConfig c;
    c.realizations = 5;
    c.max_iters = 20;
    const auto r = train(m, c);
    const auto rep = simulate_policy(m, r.policy, validation_paths(m, 20, 1));
    for (const auto& p : rep.paths) {
        double cost = 0.0;
        for (int t = 0; t < m.num_stages(); ++t) {
            const auto u = static_cast<std::size_t>(t);
            const double beta = m.plan()[t].beta;
            cost += beta * (m.scenario().penalty_cost * p.shortfall[u] + m.scenario().holding_cost * p.inventory[u]);
            EXPECT_NEAR(p.shortfall[u], std::max(0.0, p.demand[u] - p.delivered[u]), 1e-9);
        }
        EXPECT_NEAR(p.cost, cost, 1e-7);
    }
}

TEST(SimulatePolicy, WorkerCountDoesNotChangeResults) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 10;
    auto m = StageModel::from_instance(inst);
    TrainerConfig c;
    c.realizations = 5;
    c.max_iters = 10;
    const auto r = train(m, c);
    const auto paths = validation_paths(m, 25, 1);
    const auto a = simulate_policy(m, r.policy, paths, 1);
    const auto b = simulate_policy(m, r.policy, paths, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.mean_inventory, b.mean_inventory);
}

TEST(SimulatePolicy, RejectsMismatchedPlan) {
    auto m = reference_model({L::High, L::Med, L::Low});
    const auto r = train(m, exact_trainer(1, 1));
    auto other = reference_model({L::Low, L::Med, L::High});
    EXPECT_THROW((void)simulate_policy(other, r.policy, validation_paths(other, 3, 1)), std::invalid_argument);
}

TEST(StaticPlanEval, ZeroPlanOnAllLow) {
    auto m = reference_model(std::vector<MoistureLevel>(5, L::Low));
    StaticPlan p{PlanSource::TwoStage, std::vector<std::vector<double>>(5, {0.0})};
    const auto rep = simulate_static_plan(m, p, validation_paths(m, 20, 1));
    EXPECT_EQ(rep.mean, 0.0);
    EXPECT_EQ(rep.infeasible, 0);
    EXPECT_EQ(rep.model, "two-stage");
}

TEST(StaticPlanEval, OverfullPlanIsInfeasible) {
    auto m = reference_model({L::High, L::Low, L::Low});
    const double wet_cap = m.realize(0, 0.3).capacity[0];
    StaticPlan p{PlanSource::MeanValue, {{0.0}, {wet_cap}, {0.0}}};
    const auto rep = simulate_static_plan(m, p, validation_paths(m, 10, 1));
    EXPECT_EQ(rep.infeasible, 10);
}

TEST(StaticPlanEval, MatchesFixedExtensiveForm) {
    auto m = reference_model({L::High, L::Med, L::Low, L::Low});
    const auto paths = validation_paths(m, 4, 3);
    const auto mv = solve_mean_value(m);
    const auto rep = simulate_static_plan(m, mv.plan, paths);
    if (rep.infeasible == 0) {
        EXPECT_NEAR(rep.mean, testing::static_cost(m, paths, mv.plan), 1e-7);
    } else {
        EXPECT_TRUE(std::isinf(testing::static_cost(m, paths, mv.plan)));
    }
}

TEST(TruncateAndRepeat, FullLengthEqualsSimulation) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 10;
    auto m = StageModel::from_instance(inst);
    TrainerConfig c;
    c.realizations = 3;
    c.max_iters = 5;
    const auto r = train(m, c);
    const auto paths = validation_paths(m, 10, 1);
    const auto a = simulate_policy(m, r.policy, paths);
    const auto b = truncate_and_repeat(m, r.policy, paths);
    EXPECT_EQ(a.mean, b.mean);
}

TEST(TruncateAndRepeat, RepeatsShortPolicy) {
    Instance inst = default_instance();
    inst.scenario.horizon_bales = 10;
    auto full = StageModel::from_instance(inst);
    inst.scenario.horizon_bales = 5;
    auto part = StageModel::from_instance(inst);
    const auto r = train(part, exact_trainer(1, 1));
    const auto rep = truncate_and_repeat(full, r.policy, validation_paths(full, 5, 1));
    EXPECT_EQ(rep.mean_inventory.size(), 10u);
    // Deterministic short policy on the mean path: at least twice one repeat's bound.
    EXPECT_GE(rep.mean + 1e-9, 0.0);
    inst.scenario.horizon_bales = 15;
    auto longer = StageModel::from_instance(inst);
    inst.scenario.horizon_bales = 10;
    auto ten = StageModel::from_instance(inst);
    const auto r10 = train(ten, exact_trainer(1, 1));
    EXPECT_THROW((void)truncate_and_repeat(longer, r10.policy, validation_paths(longer, 2, 1)), std::invalid_argument);
}

TEST(TruncateAndRepeat, DeterministicRepeatCostsAtLeastKTimesBound) {
    Instance inst = default_instance();
    inst.moisture = MoistureModel(PerLevel<MoistureRange>{{{{0.075, 0.075}, {0.16, 0.16}, {0.25, 0.25}}}});
    inst.scenario.horizon_bales = 10;
    auto full = StageModel::from_instance(inst);
    inst.scenario.horizon_bales = 5;
    auto part = StageModel::from_instance(inst);
    const auto r = train(part, exact_trainer(1, 1));
    const auto rep = truncate_and_repeat(full, r.policy, validation_paths(full, 3, 1));
    EXPECT_GE(rep.mean, 2.0 * r.log.lower_bound.back() - 1e-6);
}

}  // namespace
}  // namespace biofeed
