#include "biofeed/config/instance.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace biofeed {

ConfigError::ConfigError(const std::string& msg, int line)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + msg : "config: " + msg),
      line_(line) {}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace {

PerLevel<double> lv(double l, double m, double h) { return PerLevel<double>{{l, m, h}}; }

EquipmentSpec machine(std::string id, EquipmentKind kind, PerLevel<double> speed) {
    EquipmentSpec e;
    e.id = std::move(id);
    e.kind = kind;
    e.geometry = 1.0;
    e.speed_bounds = speed;
    return e;
}

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

// Mapping reader that remembers which keys were consumed.
class Section {
public:
    Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.IsMap()) throw ConfigError(path_ + " must be a mapping", line_of(node_));
    }

    [[nodiscard]] bool has(const std::string& key) {
        used_.insert(key);
        return static_cast<bool>(node_[key]);
    }
    [[nodiscard]] YAML::Node get(const std::string& key) {
        used_.insert(key);
        YAML::Node n = node_[key];
        if (!n) throw ConfigError(path_ + ": missing key '" + key + "'", line_of(node_));
        return n;
    }
    [[nodiscard]] std::string where(const std::string& key) const { return path_ + "." + key; }

    template <class T>
    T scalar(const std::string& key) {
        return as<T>(get(key), where(key));
    }
    template <class T>
    void optional(const std::string& key, T& out) {
        if (has(key)) out = scalar<T>(key);
    }

    void finish() const {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in " + path_, line_of(kv.first));
        }
    }

    template <class T>
    static T as(const YAML::Node& n, const std::string& what) {
        if (!n.IsScalar()) throw ConfigError(what + " must be a scalar", line_of(n));
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(what + " has an invalid value '" + n.Scalar() + "'", line_of(n));
        }
    }

private:
    YAML::Node node_;
    std::string path_;
    std::set<std::string> used_;
};

PerLevel<double> per_level(const YAML::Node& n, const std::string& what) {
    Section s(n, what);
    PerLevel<double> v{{s.scalar<double>("low"), s.scalar<double>("med"), s.scalar<double>("high")}};
    s.finish();
    return v;
}

template <class F>
auto guarded(const YAML::Node& n, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what(), line_of(n));
    }
}

MoistureModel parse_moisture(const YAML::Node& n) {
    Section s(n, "moisture");
    PerLevel<MoistureRange> r;
    for (auto l : kAllLevels) {
        const std::string key(to_string(l));
        YAML::Node range = s.get(key);
        if (!range.IsSequence() || range.size() != 2) throw ConfigError("moisture." + key + " must be [lo, hi]", line_of(range));
        r[l] = {Section::as<double>(range[0], "moisture." + key), Section::as<double>(range[1], "moisture." + key)};
    }
    s.finish();
    return guarded(n, [&] { return MoistureModel(r); });
}

RegressionCoefficients parse_regression(const YAML::Node& n, const std::string& path) {
    Section s(n, path);
    RegressionCoefficients c;
    c.intercept = s.scalar<double>("intercept");
    c.moisture_slope = s.scalar<double>("moisture_slope");
    c.particle_slope = s.scalar<double>("particle_slope");
    c.rho50 = per_level(s.get("rho50"), s.where("rho50"));
    if (s.has("rho90_rho10")) c.rho90_rho10 = per_level(s.get("rho90_rho10"), s.where("rho90_rho10"));
    s.finish();
    return c;
}

PhysicsTables parse_physics(const YAML::Node& n) {
    Section s(n, "physics");
    PhysicsTables t = PhysicsTables::defaults();
    s.optional("dry_density", t.dry_density);
    if (s.has("grinder1")) t.grinder1 = parse_regression(s.get("grinder1"), "physics.grinder1");
    if (s.has("grinder2")) t.grinder2 = parse_regression(s.get("grinder2"), "physics.grinder2");
    if (s.has("bypass")) t.bypass = per_level(s.get("bypass"), "physics.bypass");
    if (s.has("losses")) {
        YAML::Node losses = s.get("losses");
        if (!losses.IsMap()) throw ConfigError("physics.losses must be a mapping", line_of(losses));
        t.losses.clear();
        for (const auto& kv : losses) {
            const auto id = kv.first.as<std::string>();
            const std::string path = "physics.losses." + id;
            Section row(kv.second, path);
            LossRow lr;
            lr.moisture_pct = per_level(row.get("moisture_pct"), path + ".moisture_pct");
            if (row.has("dry_matter_pct")) lr.dry_matter_pct = per_level(row.get("dry_matter_pct"), path + ".dry_matter_pct");
            row.finish();
            t.losses[id] = lr;
        }
    }
    s.finish();
    guarded(n, [&] {
        t.validate();
        return 0;
    });
    return t;
}

EquipmentKind parse_kind(const YAML::Node& n, const std::string& what) {
    const auto v = Section::as<std::string>(n, what);
    if (v == "processing") return EquipmentKind::Processing;
    if (v == "transport") return EquipmentKind::Transport;
    if (v == "storage") return EquipmentKind::Storage;
    throw ConfigError(what + " must be processing, transport or storage", line_of(n));
}

NetworkSpec parse_network(const YAML::Node& n) {
    Section s(n, "network");
    std::vector<EquipmentSpec> equipment;
    YAML::Node eq = s.get("equipment");
    if (!eq.IsSequence()) throw ConfigError("network.equipment must be a list", line_of(eq));
    for (std::size_t i = 0; i < eq.size(); ++i) {
        const std::string path = "network.equipment[" + std::to_string(i) + "]";
        Section e(eq[i], path);
        EquipmentSpec spec;
        spec.id = e.scalar<std::string>("id");
        spec.kind = parse_kind(e.get("kind"), e.where("kind"));
        e.optional("geometry", spec.geometry);
        if (e.has("speed_bounds")) spec.speed_bounds = per_level(e.get("speed_bounds"), e.where("speed_bounds"));
        if (e.has("infeed_limit")) spec.infeed_limit = per_level(e.get("infeed_limit"), e.where("infeed_limit"));
        e.optional("storage_volume", spec.storage_volume);
        if (e.has("system_feed_rate")) {
            spec.system_feed_rate = per_level(e.get("system_feed_rate"), e.where("system_feed_rate"));
        }
        e.optional("grinder", spec.grinder);
        e.finish();
        equipment.push_back(std::move(spec));
    }
    std::vector<Arc> arcs;
    YAML::Node an = s.get("arcs");
    if (!an.IsSequence()) throw ConfigError("network.arcs must be a list", line_of(an));
    for (const auto& a : an) {
        if (!a.IsSequence() || a.size() != 2) throw ConfigError("each arc must be [from, to]", line_of(a));
        arcs.push_back({Section::as<std::string>(a[0], "arc"), Section::as<std::string>(a[1], "arc")});
    }
    const auto feeder = s.scalar<std::string>("reactor_feeder");
    std::string split, target;
    s.optional("bypass_split", split);
    s.optional("bypass_target", target);
    s.finish();
    return guarded(n, [&] { return NetworkSpec(std::move(equipment), std::move(arcs), feeder, split, target); });
}

template <class F>
auto parse_enum(Section& s, const std::string& key, F&& parse) {
    YAML::Node n = s.get(key);
    return guarded(n, [&] { return parse(Section::as<std::string>(n, s.where(key))); });
}

ScenarioConfig parse_scenario(const YAML::Node& n) {
    Section s(n, "scenario");
    ScenarioConfig c;
    s.optional("horizon_bales", c.horizon_bales);
    if (s.has("mix")) c.mix = per_level(s.get("mix"), "scenario.mix");
    if (s.has("sequence")) c.sequence_strategy = parse_enum(s, "sequence", parse_sequence_strategy);
    if (s.has("order")) c.sequence_order = parse_enum(s, "order", parse_sequence_order);
    if (s.has("explicit_sequence")) {
        YAML::Node seq = s.get("explicit_sequence");
        if (!seq.IsSequence()) throw ConfigError("scenario.explicit_sequence must be a list", line_of(seq));
        for (const auto& x : seq) {
            c.explicit_sequence.push_back(guarded(x, [&] { return parse_level(Section::as<std::string>(x, "level")); }));
        }
    }
    if (s.has("stage_scheme")) c.stage_scheme.kind = parse_enum(s, "stage_scheme", parse_stage_scheme);
    s.optional("detailed_parts", c.stage_scheme.parts);
    s.optional("target_rate", c.target_rate);
    s.optional("holding_cost", c.holding_cost);
    s.optional("penalty_cost", c.penalty_cost);
    if (s.has("initial_inventory")) c.initial_inventory.kind = parse_enum(s, "initial_inventory", parse_initial_inventory);
    s.optional("initial_inventory_dt", c.initial_inventory.dt);
    s.optional("bale_dry_mass", c.bale_dry_mass);
    if (s.has("rate_normalization")) {
        c.rate_normalization = parse_enum(s, "rate_normalization", [](const std::string& v) {
            if (v == "stage-duration") return RateNormalization::StageDuration;
            if (v == "per-stage") return RateNormalization::PerStage;
            throw std::invalid_argument("rate_normalization must be stage-duration or per-stage");
        });
    }
    s.optional("seed", c.seed);
    s.finish();
    guarded(n, [&] {
        c.validate();
        return 0;
    });
    return c;
}

RunSettings parse_run(const YAML::Node& n) {
    Section s(n, "solver");
    RunSettings r;
    s.optional("realizations", r.realizations);
    s.optional("forward_paths", r.forward_paths);
    s.optional("alpha", r.alpha);
    s.optional("stall_eps", r.stall_eps);
    s.optional("stall_window", r.stall_window);
    s.optional("max_iters", r.max_iters);
    s.optional("gap_tol", r.gap_tol);
    s.optional("two_stage_paths", r.two_stage_paths);
    s.optional("validation_paths", r.validation_paths);
    s.optional("validation_seed_offset", r.validation_seed_offset);
    s.finish();
    return r;
}

void emit_levels(YAML::Emitter& out, const PerLevel<double>& v) {
    out << YAML::Flow << YAML::BeginMap;
    for (auto l : kAllLevels) out << YAML::Key << std::string(to_string(l)) << YAML::Value << format_double(v[l]);
    out << YAML::EndMap;
}

void emit_regression(YAML::Emitter& out, const RegressionCoefficients& c) {
    out << YAML::BeginMap;
    out << YAML::Key << "intercept" << YAML::Value << format_double(c.intercept);
    out << YAML::Key << "moisture_slope" << YAML::Value << format_double(c.moisture_slope);
    out << YAML::Key << "particle_slope" << YAML::Value << format_double(c.particle_slope);
    out << YAML::Key << "rho50" << YAML::Value;
    emit_levels(out, c.rho50);
    out << YAML::Key << "rho90_rho10" << YAML::Value;
    emit_levels(out, c.rho90_rho10);
    out << YAML::EndMap;
}

}  // namespace

NetworkSpec default_network() {
    const auto fast = lv(1000.0, 1000.0, 1000.0);
    std::vector<EquipmentSpec> eq;
    auto infeed = machine("infeed_conveyor", EquipmentKind::Transport, fast);
    infeed.system_feed_rate = lv(5.23, 4.53, 2.20);
    eq.push_back(infeed);
    auto g1 = machine("grinder1", EquipmentKind::Processing, lv(75.0, 66.0, 32.0));
    g1.grinder = 1;
    g1.infeed_limit = lv(5.23, 4.53, 2.20);
    eq.push_back(g1);
    eq.push_back(machine("screen", EquipmentKind::Transport, fast));
    auto g2 = machine("grinder2", EquipmentKind::Processing, fast);
    g2.grinder = 2;
    g2.infeed_limit = lv(5.23, 2.80, 1.59);
    eq.push_back(g2);
    eq.push_back(machine("grinder2_conveyor", EquipmentKind::Transport, fast));
    eq.push_back(machine("bypass_conveyor", EquipmentKind::Transport, fast));
    EquipmentSpec bin;
    bin.id = "metering_bin";
    bin.kind = EquipmentKind::Storage;
    bin.storage_volume = 6.0;
    eq.push_back(bin);
    eq.push_back(machine("bin_conveyor", EquipmentKind::Transport, fast));
    auto pellet = machine("pellet_mill", EquipmentKind::Processing, fast);
    pellet.infeed_limit = lv(4.76, 3.81, 3.34);
    eq.push_back(pellet);
    auto feeder = machine("reactor_conveyor", EquipmentKind::Transport, fast);
    feeder.infeed_limit = lv(4.81, 4.81, 4.81);
    eq.push_back(feeder);
    std::vector<Arc> arcs{{"infeed_conveyor", "grinder1"},        {"grinder1", "screen"},
                          {"screen", "grinder2"},                 {"screen", "bypass_conveyor"},
                          {"grinder2", "grinder2_conveyor"},      {"grinder2_conveyor", "metering_bin"},
                          {"bypass_conveyor", "metering_bin"},    {"metering_bin", "bin_conveyor"},
                          {"bin_conveyor", "pellet_mill"},        {"pellet_mill", "reactor_conveyor"}};
    return NetworkSpec(std::move(eq), std::move(arcs), "reactor_conveyor", "screen", "bypass_conveyor");
}

Instance default_instance() {
    return Instance{default_network(), MoistureModel(), PhysicsTables::defaults(), ScenarioConfig{}, RunSettings{}};
}

Instance parse_instance(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line + 1);
    }
    Instance inst = default_instance();
    if (root.IsNull()) return inst;
    Section s(root, "config");
    if (s.has("scenario")) inst.scenario = parse_scenario(s.get("scenario"));
    if (s.has("moisture")) inst.moisture = parse_moisture(s.get("moisture"));
    if (s.has("physics")) inst.physics = parse_physics(s.get("physics"));
    if (s.has("network")) inst.network = parse_network(s.get("network"));
    if (s.has("solver")) inst.run = parse_run(s.get("solver"));
    s.finish();
    return inst;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'", 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_instance(ss.str());
}

std::string to_yaml(const Instance& inst) {
    YAML::Emitter out;
    out << YAML::BeginMap;

    const auto& sc = inst.scenario;
    out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon_bales" << YAML::Value << sc.horizon_bales;
    out << YAML::Key << "mix" << YAML::Value;
    emit_levels(out, sc.mix);
    out << YAML::Key << "sequence" << YAML::Value << std::string(to_string(sc.sequence_strategy));
    out << YAML::Key << "order" << YAML::Value << std::string(to_string(sc.sequence_order));
    if (!sc.explicit_sequence.empty()) {
        out << YAML::Key << "explicit_sequence" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (auto l : sc.explicit_sequence) out << std::string(1, level_code(l));
        out << YAML::EndSeq;
    }
    out << YAML::Key << "stage_scheme" << YAML::Value << std::string(to_string(sc.stage_scheme.kind));
    out << YAML::Key << "detailed_parts" << YAML::Value << sc.stage_scheme.parts;
    out << YAML::Key << "target_rate" << YAML::Value << format_double(sc.target_rate);
    out << YAML::Key << "holding_cost" << YAML::Value << format_double(sc.holding_cost);
    out << YAML::Key << "penalty_cost" << YAML::Value << format_double(sc.penalty_cost);
    out << YAML::Key << "initial_inventory" << YAML::Value << std::string(to_string(sc.initial_inventory.kind));
    out << YAML::Key << "initial_inventory_dt" << YAML::Value << format_double(sc.initial_inventory.dt);
    out << YAML::Key << "bale_dry_mass" << YAML::Value << format_double(sc.bale_dry_mass);
    out << YAML::Key << "rate_normalization" << YAML::Value
        << (sc.rate_normalization == RateNormalization::StageDuration ? "stage-duration" : "per-stage");
    out << YAML::Key << "seed" << YAML::Value << sc.seed;
    out << YAML::EndMap;

    out << YAML::Key << "moisture" << YAML::Value << YAML::BeginMap;
    for (auto l : kAllLevels) {
        const auto& r = inst.moisture.range(l);
        out << YAML::Key << std::string(to_string(l)) << YAML::Value << YAML::Flow << YAML::BeginSeq
            << format_double(r.lo) << format_double(r.hi) << YAML::EndSeq;
    }
    out << YAML::EndMap;

    const auto& ph = inst.physics;
    out << YAML::Key << "physics" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "dry_density" << YAML::Value << format_double(ph.dry_density);
    out << YAML::Key << "grinder1" << YAML::Value;
    emit_regression(out, ph.grinder1);
    out << YAML::Key << "grinder2" << YAML::Value;
    emit_regression(out, ph.grinder2);
    out << YAML::Key << "bypass" << YAML::Value;
    emit_levels(out, ph.bypass);
    out << YAML::Key << "losses" << YAML::Value << YAML::BeginMap;
    for (const auto& [id, row] : ph.losses) {
        out << YAML::Key << id << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "moisture_pct" << YAML::Value;
        emit_levels(out, row.moisture_pct);
        if (row.dry_matter_pct) {
            out << YAML::Key << "dry_matter_pct" << YAML::Value;
            emit_levels(out, *row.dry_matter_pct);
        }
        out << YAML::EndMap;
    }
    out << YAML::EndMap << YAML::EndMap;

    const auto& net = inst.network;
    out << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "reactor_feeder" << YAML::Value << net.node(net.reactor_feeder()).id;
    if (net.bypass_split() >= 0) {
        out << YAML::Key << "bypass_split" << YAML::Value << net.node(net.bypass_split()).id;
        out << YAML::Key << "bypass_target" << YAML::Value << net.node(net.arc_head(net.bypass_arc())).id;
    }
    out << YAML::Key << "equipment" << YAML::Value << YAML::BeginSeq;
    for (const auto& e : net.equipment()) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << e.id;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(e.kind));
        if (e.kind == EquipmentKind::Storage) {
            out << YAML::Key << "storage_volume" << YAML::Value << format_double(e.storage_volume);
        } else {
            out << YAML::Key << "geometry" << YAML::Value << format_double(e.geometry);
            out << YAML::Key << "speed_bounds" << YAML::Value;
            emit_levels(out, e.speed_bounds);
        }
        if (e.infeed_limit) {
            out << YAML::Key << "infeed_limit" << YAML::Value;
            emit_levels(out, *e.infeed_limit);
        }
        if (e.system_feed_rate) {
            out << YAML::Key << "system_feed_rate" << YAML::Value;
            emit_levels(out, *e.system_feed_rate);
        }
        if (e.grinder != 0) out << YAML::Key << "grinder" << YAML::Value << e.grinder;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "arcs" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : net.arcs()) out << YAML::Flow << YAML::BeginSeq << a.from << a.to << YAML::EndSeq;
    out << YAML::EndSeq << YAML::EndMap;

    const auto& r = inst.run;
    out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "realizations" << YAML::Value << r.realizations;
    out << YAML::Key << "forward_paths" << YAML::Value << r.forward_paths;
    out << YAML::Key << "alpha" << YAML::Value << format_double(r.alpha);
    out << YAML::Key << "stall_eps" << YAML::Value << format_double(r.stall_eps);
    out << YAML::Key << "stall_window" << YAML::Value << r.stall_window;
    out << YAML::Key << "max_iters" << YAML::Value << r.max_iters;
    out << YAML::Key << "gap_tol" << YAML::Value << format_double(r.gap_tol);
    out << YAML::Key << "two_stage_paths" << YAML::Value << r.two_stage_paths;
    out << YAML::Key << "validation_paths" << YAML::Value << r.validation_paths;
    out << YAML::Key << "validation_seed_offset" << YAML::Value << r.validation_seed_offset;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace biofeed
