#include "biofeed/model/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace biofeed {

namespace {

constexpr double kMixTol = 1e-9;
constexpr int kMaxPattern = 10000;

std::array<MoistureLevel, 3> level_order(SequenceOrder order) {
    if (order == SequenceOrder::HighStart) return {MoistureLevel::High, MoistureLevel::Med, MoistureLevel::Low};
    return {MoistureLevel::Low, MoistureLevel::Med, MoistureLevel::High};
}

bool integral(double x) { return std::abs(x - std::round(x)) <= 1e-6; }

// Counts per level for the whole horizon; exact for pattern strategies.
PerLevel<int> exact_counts(const ScenarioConfig& cfg) {
    const int p = smallest_pattern_length(cfg.mix);
    if (cfg.horizon_bales % p != 0) {
        throw std::invalid_argument("mix is not realizable as an integer pattern over " +
                                    std::to_string(cfg.horizon_bales) + " bales; smallest feasible horizon is " +
                                    std::to_string(p) + " bales (or a multiple)");
    }
    PerLevel<int> counts;
    for (auto l : kAllLevels) counts[l] = static_cast<int>(std::lround(cfg.mix[l] * cfg.horizon_bales));
    return counts;
}

// Largest-remainder rounding; ties go to the lower level index.
PerLevel<int> rounded_counts(const ScenarioConfig& cfg) {
    PerLevel<int> counts;
    std::array<std::pair<double, int>, 3> rem{};
    int total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double x = cfg.mix.values[i] * cfg.horizon_bales;
        const double f = std::floor(x + kMixTol);
        counts.values[i] = static_cast<int>(f);
        rem[i] = {x - f, static_cast<int>(i)};
        total += counts.values[i];
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; total < cfg.horizon_bales; ++k, ++total) ++counts.values[static_cast<std::size_t>(rem[k % 3].second)];
    return counts;
}

std::vector<MoistureLevel> blocks(const PerLevel<int>& counts, SequenceOrder order, int repeat) {
    std::vector<MoistureLevel> seq;
    for (int r = 0; r < repeat; ++r) {
        for (auto l : level_order(order)) seq.insert(seq.end(), static_cast<std::size_t>(counts[l]), l);
    }
    return seq;
}

}  // namespace

double StagePlan::total_weight() const noexcept {
    double s = 0.0;
    for (const auto& st : stages) s += st.beta;
    return s;
}

void ScenarioConfig::validate() const {
    if (horizon_bales <= 0) throw std::invalid_argument("horizon_bales must be positive");
    double sum = 0.0;
    for (auto l : kAllLevels) {
        if (!(mix[l] >= 0.0 && mix[l] <= 1.0)) throw std::invalid_argument("mix fractions must lie in [0,1]");
        sum += mix[l];
    }
    if (std::abs(sum - 1.0) > kMixTol) throw std::invalid_argument("mix fractions must sum to 1");
    if (!(target_rate > 0.0)) throw std::invalid_argument("target_rate must be positive");
    if (!(bale_dry_mass > 0.0)) throw std::invalid_argument("bale_dry_mass must be positive");
    if (!(holding_cost >= 0.0) || !(penalty_cost >= 0.0)) throw std::invalid_argument("cost coefficients must be >= 0");
    if (initial_inventory.kind == InitialInventoryKind::Explicit && !(initial_inventory.dt >= 0.0)) {
        throw std::invalid_argument("explicit initial inventory must be >= 0");
    }
    if (stage_scheme.kind == StageSchemeKind::Detailed && stage_scheme.parts <= 0) {
        throw std::invalid_argument("detailed stage scheme needs a positive number of parts per bale");
    }
    if (sequence_strategy == SequenceStrategy::Explicit &&
        static_cast<int>(explicit_sequence.size()) != horizon_bales) {
        throw std::invalid_argument("explicit sequence has " + std::to_string(explicit_sequence.size()) +
                                    " bales, expected " + std::to_string(horizon_bales));
    }
}

int smallest_pattern_length(const PerLevel<double>& mix) {
    for (int p = 1; p <= kMaxPattern; ++p) {
        bool ok = true;
        for (auto l : kAllLevels) ok = ok && integral(mix[l] * p);
        if (ok) return p;
    }
    throw std::invalid_argument("mix is not realizable as an integer pattern of at most " +
                                std::to_string(kMaxPattern) + " bales");
}

std::vector<MoistureLevel> generate_sequence(const ScenarioConfig& config, std::mt19937_64& rng) {
    config.validate();
    switch (config.sequence_strategy) {
        case SequenceStrategy::ShortPattern: {
            const auto counts = exact_counts(config);
            const int p = smallest_pattern_length(config.mix);
            PerLevel<int> pattern;
            for (auto l : kAllLevels) pattern[l] = counts[l] / (config.horizon_bales / p);
            return blocks(pattern, config.sequence_order, config.horizon_bales / p);
        }
        case SequenceStrategy::LongBlocks:
            return blocks(exact_counts(config), config.sequence_order, 1);
        case SequenceStrategy::Random: {
            auto seq = blocks(rounded_counts(config), config.sequence_order, 1);
            for (std::size_t i = seq.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(uniform_index(rng, i));
                std::swap(seq[i - 1], seq[j]);
            }
            return seq;
        }
        case SequenceStrategy::Explicit:
            return config.explicit_sequence;
    }
    throw std::logic_error("unhandled sequence strategy");
}

StagePlan build_stage_plan(const std::vector<MoistureLevel>& sequence, const StageScheme& scheme) {
    if (sequence.empty()) throw std::invalid_argument("stage plan needs a nonempty bale sequence");
    StagePlan plan;
    const int n = static_cast<int>(sequence.size());
    switch (scheme.kind) {
        case StageSchemeKind::PerBale:
            for (int b = 0; b < n; ++b) plan.stages.push_back({sequence[static_cast<std::size_t>(b)], 1.0, b, 1});
            break;
        case StageSchemeKind::Combined:
            for (int b = 0; b < n;) {
                int e = b;
                while (e < n && sequence[static_cast<std::size_t>(e)] == sequence[static_cast<std::size_t>(b)]) ++e;
                plan.stages.push_back({sequence[static_cast<std::size_t>(b)], static_cast<double>(e - b), b, e - b});
                b = e;
            }
            break;
        case StageSchemeKind::Detailed:
            if (scheme.parts <= 0) throw std::invalid_argument("detailed stage scheme needs parts > 0");
            for (int b = 0; b < n; ++b) {
                for (int k = 0; k < scheme.parts; ++k) {
                    plan.stages.push_back({sequence[static_cast<std::size_t>(b)], 1.0 / scheme.parts, b, 1});
                }
            }
            break;
    }
    return plan;
}

std::string_view to_string(SequenceStrategy s) noexcept {
    switch (s) {
        case SequenceStrategy::ShortPattern: return "short";
        case SequenceStrategy::LongBlocks: return "long";
        case SequenceStrategy::Random: return "random";
        case SequenceStrategy::Explicit: return "explicit";
    }
    return "?";
}

std::string_view to_string(SequenceOrder o) noexcept {
    return o == SequenceOrder::HighStart ? "high-start" : "low-start";
}

std::string_view to_string(StageSchemeKind k) noexcept {
    switch (k) {
        case StageSchemeKind::PerBale: return "per-bale";
        case StageSchemeKind::Combined: return "combined";
        case StageSchemeKind::Detailed: return "detailed";
    }
    return "?";
}

std::string_view to_string(InitialInventoryKind k) noexcept {
    switch (k) {
        case InitialInventoryKind::Empty: return "empty";
        case InitialInventoryKind::HalfFull: return "half-full";
        case InitialInventoryKind::Full: return "full";
        case InitialInventoryKind::Explicit: return "explicit";
    }
    return "?";
}

SequenceStrategy parse_sequence_strategy(std::string_view s) {
    if (s == "short") return SequenceStrategy::ShortPattern;
    if (s == "long") return SequenceStrategy::LongBlocks;
    if (s == "random") return SequenceStrategy::Random;
    if (s == "explicit") return SequenceStrategy::Explicit;
    throw std::invalid_argument("unknown sequence strategy '" + std::string(s) + "' (short, long, random, explicit)");
}

SequenceOrder parse_sequence_order(std::string_view s) {
    if (s == "high-start") return SequenceOrder::HighStart;
    if (s == "low-start") return SequenceOrder::LowStart;
    throw std::invalid_argument("unknown sequence order '" + std::string(s) + "' (high-start, low-start)");
}

StageSchemeKind parse_stage_scheme(std::string_view s) {
    if (s == "per-bale") return StageSchemeKind::PerBale;
    if (s == "combined") return StageSchemeKind::Combined;
    if (s == "detailed") return StageSchemeKind::Detailed;
    throw std::invalid_argument("unknown stage scheme '" + std::string(s) + "' (per-bale, combined, detailed)");
}

InitialInventoryKind parse_initial_inventory(std::string_view s) {
    if (s == "empty") return InitialInventoryKind::Empty;
    if (s == "half-full") return InitialInventoryKind::HalfFull;
    if (s == "full") return InitialInventoryKind::Full;
    if (s == "explicit") return InitialInventoryKind::Explicit;
    throw std::invalid_argument("unknown initial inventory '" + std::string(s) + "' (empty, half-full, full, explicit)");
}

}  // namespace biofeed
