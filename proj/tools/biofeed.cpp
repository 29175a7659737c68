#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "biofeed/cli/experiment.hpp"
#include "biofeed/util/parallel.hpp"

namespace {

biofeed::SweepAxis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--axis", "expected name=v1,v2,... got '" + text + "'");
    biofeed::SweepAxis axis{text.substr(0, eq), {}};
    std::string rest = text.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const auto end = comma == std::string::npos ? rest.size() : comma;
        axis.values.push_back(rest.substr(pos, end - pos));
        pos = end + 1;
    }
    return axis;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("biofeed"));
    spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

    biofeed::ExperimentSpec spec;
    spec.workers = biofeed::workers_from_env(1);
    std::string config;
    std::string out = ".";
    std::vector<std::string> axes;
    bool quiet = false;

    CLI::App app{"Multi-stage inventory planning for a biomass preprocessing line"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    const auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config, "Instance YAML (built-in base case when omitted)");
        sub->add_option("-o,--out", out, "Output directory")->capture_default_str();
        sub->add_option("-s,--seed", spec.seed, "Master seed")->capture_default_str();
        sub->add_option("-w,--workers", spec.workers, "Worker threads (default from BIOFEED_WORKERS)")
            ->check(CLI::PositiveNumber);
        auto& o = spec.overrides;
        sub->add_option("--nt", o.realizations, "Realizations per stage")->check(CLI::PositiveNumber);
        sub->add_option("--paths", o.two_stage_paths, "Two-stage sample size")->check(CLI::PositiveNumber);
        sub->add_option("--sv", o.validation_paths, "Validation paths")->check(CLI::PositiveNumber);
        sub->add_option("--max-iters", o.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
        sub->add_option("--stall-eps", o.stall_eps, "Lower-bound stall tolerance")->check(CLI::NonNegativeNumber);
        sub->add_option("--stall-window", o.stall_window, "Lower-bound stall window")->check(CLI::PositiveNumber);
    };

    auto* train = app.add_subcommand("train", "Train a multi-stage policy");
    common(train);
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved policy or static plan");
    common(evaluate);
    evaluate->add_option("--policy", spec.policy, "Policy file from train");
    evaluate->add_option("--plan", spec.plan, "Static plan file from compare");
    auto* cmp = app.add_subcommand("compare", "Train and compare multi-stage, two-stage and mean-value models");
    common(cmp);
    auto* sweep = app.add_subcommand("sweep", "Run compare over a grid of scenario settings");
    common(sweep);
    std::string axis_help = "Axis as name=v1,v2 (repeatable); names:";
    for (const auto& n : biofeed::sweep_axis_names()) axis_help += " " + n;
    sweep->add_option("--axis", axes, axis_help)->required();

    try {
        app.parse(argc, argv);
        for (const auto& a : axes) spec.axes.push_back(parse_axis(a));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? biofeed::kExitOk : biofeed::kExitUsage;
    }
    if (quiet) spdlog::set_level(spdlog::level::warn);

    if (train->parsed()) spec.command = biofeed::Command::Train;
    if (evaluate->parsed()) spec.command = biofeed::Command::Evaluate;
    if (cmp->parsed()) spec.command = biofeed::Command::Compare;
    if (sweep->parsed()) spec.command = biofeed::Command::Sweep;
    spec.config = config;
    spec.out = out;
    return biofeed::run(spec);
}
