#include "biofeed/eval/eval.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "biofeed/config/instance.hpp"
#include "biofeed/util/parallel.hpp"

namespace biofeed {

namespace {

constexpr std::uint64_t kValidationStream = 0x76616c69;

PathRecord record_of(const PathResult& r) {
    PathRecord p;
    p.cost = r.cost;
    for (const auto& s : r.states) {
        double total = 0.0;
        for (double x : s) total += x;
        p.inventory.push_back(total);
    }
    p.shortfall = r.shortfall;
    p.delivered = r.delivered;
    p.demand = r.demand;
    return p;
}

void check_plan(const StageModel& model, const StagePlan& plan, int period) {
    const int T = model.num_stages();
    const int k = plan.size();
    if (k == 0 || T % k != 0 || (period == 0 && k != T)) {
        throw std::invalid_argument("policy covers " + std::to_string(k) + " stages; the horizon has " +
                                    std::to_string(T) + (period ? " (must be a multiple)" : ""));
    }
    for (int t = 0; t < T; ++t) {
        const auto& a = model.plan()[t];
        const auto& b = plan[t % k];
        if (a.level != b.level || a.beta != b.beta) {
            throw std::invalid_argument("policy stage " + std::to_string(t % k) + " (" +
                                        std::string(to_string(b.level)) + ") does not match stage " +
                                        std::to_string(t) + " of the plan (" + std::string(to_string(a.level)) + ")");
        }
    }
}

EvaluationReport roll_policy(const StageModel& model, const Policy& policy,
                             const std::vector<std::vector<double>>& paths, int workers, std::string label,
                             int period) {
    check_plan(model, policy.plan, period);
    if (policy.cuts.num_stages() != policy.plan.size()) throw std::invalid_argument("policy cut pools do not match its plan");
    const auto init = model.initial_state();
    std::vector<PathRecord> recs(paths.size());
    parallel_for(static_cast<int>(paths.size()), workers, [&](int i) {
        auto& rec = recs[static_cast<std::size_t>(i)];
        try {
            rec = record_of(simulate_path(model, policy.cuts, paths[static_cast<std::size_t>(i)], init, period));
        } catch (const StageInfeasible&) {
            rec = PathRecord{};
            rec.feasible = false;
        }
    });
    return summarize(std::move(label), std::move(recs));
}

}  // namespace

std::vector<std::vector<double>> validation_paths(const StageModel& model, int count, std::uint64_t seed,
                                                  std::uint64_t seed_offset) {
    return sample_moisture_paths(model, count, seed + seed_offset, kValidationStream);
}

EvaluationReport summarize(std::string model, std::vector<PathRecord> paths) {
    EvaluationReport r;
    r.model = std::move(model);
    r.paths = std::move(paths);
    std::vector<double> costs;
    std::size_t stages = 0;
    for (const auto& p : r.paths) {
        if (!p.feasible) {
            ++r.infeasible;
            continue;
        }
        costs.push_back(p.cost);
        stages = std::max(stages, p.inventory.size());
    }
    const auto n = static_cast<double>(costs.size());
    if (costs.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.mean = r.stddev = r.ci_lower = r.ci_upper = nan;
        return r;
    }
    // Shifted by the first cost so identical costs give an exact mean and zero spread.
    double shift = 0.0;
    for (double c : costs) shift += c - costs.front();
    r.mean = costs.front() + shift / n;
    if (costs.size() > 1) {
        double ss = 0.0;
        for (double c : costs) ss += (c - r.mean) * (c - r.mean);
        r.stddev = std::sqrt(ss / (n - 1.0));
        const double half = kZ975 * r.stddev / std::sqrt(n);
        r.ci_lower = r.mean - half;
        r.ci_upper = r.mean + half;
    } else {
        r.ci_lower = -std::numeric_limits<double>::infinity();
        r.ci_upper = std::numeric_limits<double>::infinity();
    }
    r.mean_inventory.assign(stages, 0.0);
    r.mean_shortfall.assign(stages, 0.0);
    r.rate_attainment.assign(stages, 0.0);
    for (const auto& p : r.paths) {
        if (!p.feasible) continue;
        for (std::size_t t = 0; t < p.inventory.size(); ++t) {
            r.mean_inventory[t] += p.inventory[t] / n;
            r.mean_shortfall[t] += p.shortfall[t] / n;
            const double att = p.demand[t] > 0.0 ? std::min(1.0, p.delivered[t] / p.demand[t]) : 1.0;
            r.rate_attainment[t] += att / n;
        }
    }
    return r;
}

EvaluationReport simulate_policy(const StageModel& model, const Policy& policy,
                                 const std::vector<std::vector<double>>& paths, int workers, std::string label) {
    return roll_policy(model, policy, paths, workers, std::move(label), 0);
}

EvaluationReport truncate_and_repeat(const StageModel& model, const Policy& policy,
                                     const std::vector<std::vector<double>>& paths, int workers, std::string label) {
    if (policy.plan.size() == 0 || model.num_stages() % policy.plan.size() != 0) {
        throw std::invalid_argument("horizon of " + std::to_string(model.num_stages()) +
                                    " stages is not a multiple of the policy length " +
                                    std::to_string(policy.plan.size()));
    }
    const int period = policy.plan.size() == model.num_stages() ? 0 : policy.plan.size();
    return roll_policy(model, policy, paths, workers, std::move(label), period);
}

EvaluationReport simulate_static_plan(const StageModel& model, const StaticPlan& plan,
                                      const std::vector<std::vector<double>>& paths, int workers, std::string label) {
    const int T = model.num_stages();
    if (plan.num_stages() != T) throw std::invalid_argument("plan length differs from the horizon");
    for (const auto& row : plan.inventory) {
        if (static_cast<int>(row.size()) != model.num_states()) throw std::invalid_argument("plan width differs from the storage count");
    }
    if (label.empty()) label = to_string(plan.source);
    const auto init = model.initial_state();
    std::vector<PathRecord> recs(paths.size());
    parallel_for(static_cast<int>(paths.size()), workers, [&](int i) {
        const auto& path = paths[static_cast<std::size_t>(i)];
        if (static_cast<int>(path.size()) != T) throw std::invalid_argument("moisture path length differs from stage count");
        PathRecord rec;
        try {
            std::vector<double> prev = init;
            for (int t = 0; t < T; ++t) {
                const auto real = model.realize(t, path[static_cast<std::size_t>(t)]);
                const auto& target = plan.inventory[static_cast<std::size_t>(t)];
                const auto out = solve_stage(model, real, prev, {}, true, target);
                rec.cost += out.immediate_cost;
                double total = 0.0;
                for (double x : target) total += x;
                rec.inventory.push_back(total);
                rec.shortfall.push_back(out.shortfall);
                rec.delivered.push_back(out.delivered);
                rec.demand.push_back(real.demand);
                prev = target;
            }
        } catch (const StageInfeasible&) {
            rec = PathRecord{};
            rec.feasible = false;
        }
        recs[static_cast<std::size_t>(i)] = std::move(rec);
    });
    return summarize(std::move(label), std::move(recs));
}

std::vector<GapRow> compare(const std::vector<EvaluationReport>& reports, const EvaluationReport& reference) {
    const double ref = 0.5 * (reference.ci_lower + reference.ci_upper);
    const double ref_mid = std::isfinite(ref) ? ref : reference.mean;
    std::vector<GapRow> rows;
    for (const auto& r : reports) {
        if (r.paths.size() != reference.paths.size()) {
            throw std::invalid_argument("report '" + r.model + "' was evaluated on a different path set");
        }
        GapRow g;
        g.model = r.model;
        g.mean = r.mean;
        g.ci_lower = r.ci_lower;
        g.ci_upper = r.ci_upper;
        g.infeasible = r.infeasible;
        const double mid_raw = 0.5 * (r.ci_lower + r.ci_upper);
        const double mid = std::isfinite(mid_raw) ? mid_raw : r.mean;
        if (ref_mid == 0.0) {
            g.absolute = true;
            g.gap = mid - ref_mid;
        } else {
            g.gap = (mid - ref_mid) / ref_mid * 100.0;
        }
        rows.push_back(std::move(g));
    }
    return rows;
}

PairedDifference paired_difference(const EvaluationReport& a, const EvaluationReport& b) {
    if (a.paths.size() != b.paths.size()) throw std::invalid_argument("paired comparison needs shared paths");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        if (a.paths[i].feasible && b.paths[i].feasible) d.push_back(a.paths[i].cost - b.paths[i].cost);
    }
    PairedDifference p;
    p.pairs = static_cast<int>(d.size());
    if (d.size() < 2) throw std::invalid_argument("paired comparison needs at least two shared feasible paths");
    const auto n = static_cast<double>(d.size());
    for (double x : d) p.mean += x;
    p.mean /= n;
    double ss = 0.0;
    for (double x : d) ss += (x - p.mean) * (x - p.mean);
    const double half = kZ975 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    p.ci_lower = p.mean - half;
    p.ci_upper = p.mean + half;
    return p;
}

std::string artifact_header(const std::string& fingerprint, std::uint64_t seed) {
    return "# biofeed fingerprint " + fingerprint + " seed " + std::to_string(seed);
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<GapRow>& rows, const std::string& fingerprint,
                       std::uint64_t seed) {
    out << artifact_header(fingerprint, seed) << "\r\n";
    out << "model,mean,ci_lower,ci_upper,gap,gap_kind,infeasible\r\n";
    for (const auto& r : rows) {
        out << csv_field(r.model) << ',' << num(r.mean) << ',' << num(r.ci_lower) << ',' << num(r.ci_upper) << ','
            << num(r.gap) << ',' << (r.absolute ? "absolute" : "percent") << ',' << r.infeasible << "\r\n";
    }
}

void write_trajectory_csv(std::ostream& out, const std::vector<EvaluationReport>& reports,
                          const std::string& fingerprint, std::uint64_t seed) {
    out << artifact_header(fingerprint, seed) << "\r\n";
    out << "model,stage,statistic,value\r\n";
    for (const auto& r : reports) {
        const auto put = [&](const char* stat, const std::vector<double>& v) {
            for (std::size_t t = 0; t < v.size(); ++t) {
                out << csv_field(r.model) << ',' << t << ',' << stat << ',' << num(v[t]) << "\r\n";
            }
        };
        put("mean_inventory", r.mean_inventory);
        put("mean_shortfall", r.mean_shortfall);
        put("rate_attainment", r.rate_attainment);
    }
}

}  // namespace biofeed
