#include "biofeed/cli/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "biofeed/util/parallel.hpp"

namespace biofeed {

namespace {

constexpr std::uint64_t kTwoStageStream = 0x74776f73;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

double parse_number(const std::string& axis, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("sweep axis " + axis + ": '" + v + "' is not a number", 0);
}

}  // namespace

void Overrides::apply(RunSettings& run) const {
    if (realizations) run.realizations = *realizations;
    if (two_stage_paths) run.two_stage_paths = *two_stage_paths;
    if (validation_paths) run.validation_paths = *validation_paths;
    if (max_iters) run.max_iters = *max_iters;
    if (stall_eps) run.stall_eps = *stall_eps;
    if (stall_window) run.stall_window = *stall_window;
}

const std::vector<std::string>& sweep_axis_names() {
    static const std::vector<std::string> names{"target_rate",    "initial_inventory", "sequence_strategy",
                                                "sequence_order", "stage_scheme",      "horizon",
                                                "mix"};
    return names;
}

void apply_axis(Instance& inst, const std::string& axis, const std::string& value) {
    auto& sc = inst.scenario;
    try {
        if (axis == "target_rate") {
            sc.target_rate = parse_number(axis, value);
        } else if (axis == "initial_inventory") {
            if (!value.empty() && (std::isdigit(static_cast<unsigned char>(value[0])) || value[0] == '.')) {
                sc.initial_inventory = {InitialInventoryKind::Explicit, parse_number(axis, value)};
            } else {
                sc.initial_inventory = {parse_initial_inventory(value), 0.0};
            }
        } else if (axis == "sequence_strategy") {
            sc.sequence_strategy = parse_sequence_strategy(value);
        } else if (axis == "sequence_order") {
            sc.sequence_order = parse_sequence_order(value);
        } else if (axis == "stage_scheme") {
            // name or name:parts
            const auto colon = value.find(':');
            sc.stage_scheme.kind = parse_stage_scheme(value.substr(0, colon));
            if (colon != std::string::npos) {
                sc.stage_scheme.parts = static_cast<int>(parse_number(axis, value.substr(colon + 1)));
            }
        } else if (axis == "horizon") {
            const double h = parse_number(axis, value);
            if (h != std::floor(h) || h < 1) throw ConfigError("sweep axis horizon: '" + value + "' is not a positive integer", 0);
            sc.horizon_bales = static_cast<int>(h);
        } else if (axis == "mix") {
            // low:med:high shares
            std::vector<double> shares;
            std::istringstream ss(value);
            std::string part;
            while (std::getline(ss, part, ':')) shares.push_back(parse_number(axis, part));
            if (shares.size() != 3) throw ConfigError("sweep axis mix: expected low:med:high, got '" + value + "'", 0);
            sc.mix = PerLevel<double>{{shares[0], shares[1], shares[2]}};
        } else {
            std::string known;
            for (const auto& n : sweep_axis_names()) known += (known.empty() ? "" : ", ") + n;
            throw ConfigError("unknown sweep axis '" + axis + "' (known: " + known + ")", 0);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("sweep axis " + axis + ": " + e.what(), 0);
    }
}

std::string experiment_fingerprint(const Instance& instance) { return fnv1a_hex(to_yaml(instance)); }

Comparison run_comparison(const Instance& inst, std::uint64_t seed, int workers) {
    Comparison c;
    c.fingerprint = experiment_fingerprint(inst);
    const auto model = StageModel::from_instance(inst);
    const auto& run = inst.run;
    const auto paths = validation_paths(model, run.validation_paths, seed, run.validation_seed_offset);

    auto t0 = std::chrono::steady_clock::now();
    auto tcfg = TrainerConfig::from(run, seed);
    tcfg.workers = workers;
    c.multi_stage = train(model, tcfg);
    spdlog::info("multi-stage: {} iterations ({}), lower bound {}", c.multi_stage.log.iterations(),
                 to_string(c.multi_stage.log.stop), c.multi_stage.log.lower_bound.back());
    auto ms = simulate_policy(model, c.multi_stage.policy, paths, workers);
    c.runs.push_back({std::move(ms), seconds_since(t0)});

    t0 = std::chrono::steady_clock::now();
    TwoStageOptions opt;
    opt.workers = workers;
    const auto sample = sample_moisture_paths(model, run.two_stage_paths, seed, kTwoStageStream);
    c.two_stage = solve_two_stage(model, sample, PlanSource::TwoStage, opt);
    spdlog::info("two-stage: objective {} after {} iterations", c.two_stage.objective, c.two_stage.iterations);
    auto ts = simulate_static_plan(model, c.two_stage.plan, paths, workers);
    c.runs.push_back({std::move(ts), seconds_since(t0)});

    t0 = std::chrono::steady_clock::now();
    c.mean_value = solve_mean_value(model, opt);
    spdlog::info("mean-value: objective {}", c.mean_value.objective);
    auto mv = simulate_static_plan(model, c.mean_value.plan, paths, workers);
    c.runs.push_back({std::move(mv), seconds_since(t0)});

    std::vector<EvaluationReport> reports;
    for (const auto& r : c.runs) reports.push_back(r.report);
    c.gaps = compare(reports, c.runs.front().report);
    return c;
}

namespace {

Instance load(const ExperimentSpec& spec) {
    Instance inst = spec.config.empty() ? default_instance() : load_instance(spec.config);
    spec.overrides.apply(inst.run);
    return inst;
}

void write_bounds(const std::filesystem::path& dir, const TrainResult& r) {
    const auto path = dir / "bounds.csv";
    auto out = open_out(path);
    out << artifact_header(r.policy.fingerprint, r.policy.seed) << "\r\n";
    out << "iteration,lower_bound,forward_mean,forward_variance,forward_upper\r\n";
    const auto& log = r.log;
    for (int k = 0; k < log.iterations(); ++k) {
        const auto u = static_cast<std::size_t>(k);
        out << k + 1 << ',' << num(log.lower_bound[u]) << ',' << num(log.forward_mean[u]) << ','
            << num(log.forward_variance[u]) << ',' << num(log.forward_upper[u]) << "\r\n";
    }
    close_out(out, path);

    const auto spath = dir / "train_summary.csv";
    auto s = open_out(spath);
    s << artifact_header(r.policy.fingerprint, r.policy.seed) << "\r\n";
    s << "iterations,stop,lower_bound,upper_mean,upper_stddev,upper_bound,upper_samples,upper_exact\r\n";
    const auto& b = log.final_bound;
    s << log.iterations() << ',' << to_string(log.stop) << ',' << num(log.lower_bound.back()) << ',' << num(b.mean)
      << ',' << num(b.stddev) << ',' << num(b.upper) << ',' << b.samples << ','
      << (log.final_bound_exact ? "true" : "false") << "\r\n";
    close_out(s, spath);
}

void write_policy(const std::filesystem::path& path, const Policy& p) {
    auto out = open_out(path);
    save_policy(p, out);
    close_out(out, path);
}

void write_plan(const std::filesystem::path& path, const StaticPlan& p, const NetworkSpec& net,
                const std::string& fp, std::uint64_t seed) {
    auto out = open_out(path);
    write_static_plan(p, net, out, fp, seed);
    close_out(out, path);
}

void write_runtime(const std::filesystem::path& path, const std::string& fp, std::uint64_t seed,
                   const std::vector<std::pair<std::string, double>>& rows) {
    auto out = open_out(path);
    out << artifact_header(fp, seed) << "\r\n";
    out << "model,seconds\r\n";
    for (const auto& [name, sec] : rows) out << csv_field(name) << ',' << num(sec) << "\r\n";
    close_out(out, path);
}

int do_train(const ExperimentSpec& spec) {
    const auto inst = load(spec);
    const auto model = StageModel::from_instance(inst);
    auto cfg = TrainerConfig::from(inst.run, spec.seed);
    cfg.workers = spec.workers;
    const auto r = train(model, cfg);
    spdlog::info("trained {} iterations ({}), lower bound {}, upper bound {}", r.log.iterations(),
                 to_string(r.log.stop), r.log.lower_bound.back(), r.log.final_bound.upper);
    write_policy(spec.out / "policy.txt", r.policy);
    write_bounds(spec.out, r);
    return kExitOk;
}

int do_evaluate(const ExperimentSpec& spec) {
    if (spec.policy.empty() == spec.plan.empty()) {
        spdlog::error("evaluate needs exactly one of --policy and --plan");
        return kExitUsage;
    }
    const auto inst = load(spec);
    const auto model = StageModel::from_instance(inst);
    const auto paths = validation_paths(model, inst.run.validation_paths, spec.seed, inst.run.validation_seed_offset);
    EvaluationReport rep;
    std::string fp;
    if (!spec.policy.empty()) {
        std::ifstream in(spec.policy);
        if (!in) throw IoError("cannot read '" + spec.policy.string() + "'");
        const auto cfg = TrainerConfig::from(inst.run, spec.seed);
        fp = fingerprint(model, cfg);
        const auto policy = load_policy(in, fp);
        rep = simulate_policy(model, policy, paths, spec.workers);
    } else {
        std::ifstream in(spec.plan);
        if (!in) throw IoError("cannot read '" + spec.plan.string() + "'");
        std::string stored;
        const auto plan = read_static_plan(in, model.network(), &stored);
        fp = experiment_fingerprint(inst);
        if (!stored.empty() && stored != fp) {
            throw FingerprintMismatch("plan file fingerprint " + stored + " does not match the instance (" + fp + ")");
        }
        rep = simulate_static_plan(model, plan, paths, spec.workers);
    }
    spdlog::info("{}: mean {} [{}, {}], {} infeasible paths", rep.model, rep.mean, rep.ci_lower, rep.ci_upper,
                 rep.infeasible);
    const auto path = spec.out / "evaluation.csv";
    auto out = open_out(path);
    write_summary_csv(out, compare({rep}, rep), fp, spec.seed);
    close_out(out, path);
    const auto tpath = spec.out / "trajectories.csv";
    auto t = open_out(tpath);
    write_trajectory_csv(t, {rep}, fp, spec.seed);
    close_out(t, tpath);
    return kExitOk;
}

int do_compare(const ExperimentSpec& spec) {
    const auto inst = load(spec);
    const auto c = run_comparison(inst, spec.seed, spec.workers);
    const auto model = StageModel::from_instance(inst);
    {
        const auto path = spec.out / "compare.csv";
        auto out = open_out(path);
        write_summary_csv(out, c.gaps, c.fingerprint, spec.seed);
        close_out(out, path);
    }
    {
        const auto path = spec.out / "trajectories.csv";
        auto out = open_out(path);
        std::vector<EvaluationReport> reps;
        for (const auto& r : c.runs) reps.push_back(r.report);
        write_trajectory_csv(out, reps, c.fingerprint, spec.seed);
        close_out(out, path);
    }
    write_policy(spec.out / "policy.txt", c.multi_stage.policy);
    write_bounds(spec.out, c.multi_stage);
    write_plan(spec.out / "two_stage_plan.txt", c.two_stage.plan, model.network(), c.fingerprint, spec.seed);
    write_plan(spec.out / "mean_value_plan.txt", c.mean_value.plan, model.network(), c.fingerprint, spec.seed);
    std::vector<std::pair<std::string, double>> times;
    for (const auto& r : c.runs) times.emplace_back(r.report.model, r.seconds);
    write_runtime(spec.out / "runtime.csv", c.fingerprint, spec.seed, times);
    for (const auto& g : c.gaps) {
        spdlog::info("{}: mean {} [{}, {}], gap {}{}", g.model, g.mean, g.ci_lower, g.ci_upper, g.gap,
                     g.absolute ? " (absolute)" : "%");
    }
    return kExitOk;
}

int do_sweep(const ExperimentSpec& spec) {
    if (spec.axes.empty()) {
        spdlog::error("sweep needs at least one --axis");
        return kExitUsage;
    }
    const auto base = load(spec);
    // Full grid over the axes, last axis fastest.
    std::vector<std::vector<std::string>> points{{}};
    for (const auto& ax : spec.axes) {
        if (ax.values.empty()) throw ConfigError("sweep axis " + ax.name + " has no values", 0);
        std::vector<std::vector<std::string>> next;
        for (const auto& p : points) {
            for (const auto& v : ax.values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    std::vector<Instance> instances;
    for (const auto& p : points) {
        Instance inst = base;
        for (std::size_t a = 0; a < p.size(); ++a) apply_axis(inst, spec.axes[a].name, p[a]);
        (void)StageModel::from_instance(inst);  // reject invalid points before any solve
        instances.push_back(std::move(inst));
    }
    std::vector<Comparison> results(points.size());
    const int outer = std::min<int>(spec.workers, static_cast<int>(points.size()));
    const int inner = std::max(1, spec.workers / std::max(1, outer));
    parallel_for(static_cast<int>(points.size()), outer, [&](int i) {
        results[static_cast<std::size_t>(i)] = run_comparison(instances[static_cast<std::size_t>(i)], spec.seed, inner);
    });
    const std::string fp = experiment_fingerprint(base);
    const auto path = spec.out / "sweep.csv";
    auto out = open_out(path);
    out << artifact_header(fp, spec.seed) << "\r\n";
    for (const auto& ax : spec.axes) out << csv_field(ax.name) << ',';
    out << "fingerprint,model,mean,ci_lower,ci_upper,gap,gap_kind,infeasible\r\n";
    std::vector<std::pair<std::string, double>> times;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::string key;
        for (const auto& v : points[i]) key += (key.empty() ? "" : " ") + v;
        for (const auto& g : results[i].gaps) {
            for (const auto& v : points[i]) out << csv_field(v) << ',';
            out << results[i].fingerprint << ',' << csv_field(g.model) << ',' << num(g.mean) << ',' << num(g.ci_lower)
                << ',' << num(g.ci_upper) << ',' << num(g.gap) << ',' << (g.absolute ? "absolute" : "percent") << ','
                << g.infeasible << "\r\n";
        }
        for (const auto& r : results[i].runs) times.emplace_back(key + " " + r.report.model, r.seconds);
    }
    close_out(out, path);
    write_runtime(spec.out / "sweep_runtime.csv", fp, spec.seed, times);
    return kExitOk;
}

}  // namespace

int run(const ExperimentSpec& spec) {
    try {
        std::error_code ec;
        std::filesystem::create_directories(spec.out, ec);
        if (ec) throw IoError("cannot create output directory '" + spec.out.string() + "': " + ec.message());
        switch (spec.command) {
            case Command::Train: return do_train(spec);
            case Command::Evaluate: return do_evaluate(spec);
            case Command::Compare: return do_compare(spec);
            case Command::Sweep: return do_sweep(spec);
        }
        return kExitUsage;
    } catch (const ConfigError& e) {
        if (e.line() > 0) spdlog::error("config error (line {}): {}", e.line(), e.what());
        else spdlog::error("config error: {}", e.what());
        return kExitConfig;
    } catch (const StageInfeasible& e) {
        spdlog::error("infeasible stage problem: {}", e.what());
        return kExitInfeasible;
    } catch (const PlanInfeasible& e) {
        spdlog::error("infeasible static plan: {}", e.what());
        return kExitInfeasible;
    } catch (const FingerprintMismatch& e) {
        spdlog::error("{}", e.what());
        return kExitFingerprint;
    } catch (const IoError& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        spdlog::error("invalid input: {}", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return kExitInternal;
    }
}

}  // namespace biofeed
