#include "biofeed/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace biofeed {

std::string_view to_string(EquipmentKind kind) noexcept {
    switch (kind) {
        case EquipmentKind::Processing: return "processing";
        case EquipmentKind::Transport: return "transport";
        case EquipmentKind::Storage: return "storage";
    }
    return "?";
}

std::string_view to_string(DensityContext ctx) noexcept {
    switch (ctx) {
        case DensityContext::DryBaseline: return "dry";
        case DensityContext::Grinder1: return "grinder1";
        case DensityContext::Grinder2: return "grinder2";
    }
    return "?";
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("network: " + msg); }

void check_levels(const std::string& id, const char* field, const PerLevel<double>& v) {
    for (auto l : kAllLevels) {
        if (!(v[l] >= 0.0) || !std::isfinite(v[l])) {
            fail("equipment '" + id + "' field " + field + " must be finite and nonnegative");
        }
    }
}

}  // namespace

NetworkSpec::NetworkSpec(std::vector<EquipmentSpec> equipment, std::vector<Arc> arcs, std::string reactor_feeder,
                         std::string bypass_split, std::string bypass_target)
    : equipment_(std::move(equipment)), arcs_(std::move(arcs)) {
    validate_and_index(reactor_feeder, bypass_split, bypass_target);
}

int NetworkSpec::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < equipment_.size(); ++i) {
        if (equipment_[i].id == id) return static_cast<int>(i);
    }
    throw std::out_of_range("network: unknown equipment id '" + std::string(id) + "'");
}

void NetworkSpec::validate_and_index(const std::string& reactor_feeder, const std::string& bypass_split,
                                     const std::string& bypass_target) {
    const int n = static_cast<int>(equipment_.size());
    if (n == 0) fail("no equipment");

    std::map<std::string, int> ids;
    for (int i = 0; i < n; ++i) {
        const auto& e = equipment_[static_cast<std::size_t>(i)];
        if (e.id.empty()) fail("equipment with empty id");
        if (!ids.emplace(e.id, i).second) fail("duplicate equipment id '" + e.id + "'");
        if (!(e.geometry >= 0.0) || !std::isfinite(e.geometry)) fail("equipment '" + e.id + "' geometry must be >= 0");
        check_levels(e.id, "speed_bounds", e.speed_bounds);
        if (e.infeed_limit) check_levels(e.id, "infeed_limit", *e.infeed_limit);
        if (e.system_feed_rate) {
            check_levels(e.id, "system_feed_rate", *e.system_feed_rate);
            for (auto l : kAllLevels) {
                if ((*e.system_feed_rate)[l] <= 0.0) fail("equipment '" + e.id + "' system_feed_rate must be > 0");
            }
        }
        const bool storage = e.kind == EquipmentKind::Storage;
        if (!(e.storage_volume >= 0.0) || !std::isfinite(e.storage_volume)) {
            fail("equipment '" + e.id + "' storage_volume must be >= 0");
        }
        if (storage != (e.storage_volume > 0.0)) {
            fail("equipment '" + e.id + "': storage_volume must be positive exactly for storage nodes");
        }
        if (e.grinder != 0 && e.grinder != 1 && e.grinder != 2) fail("equipment '" + e.id + "' grinder must be 0, 1 or 2");
        if (e.grinder != 0 && e.kind != EquipmentKind::Processing) {
            fail("equipment '" + e.id + "' is a grinder but not a processing node");
        }
        if (!storage) {
            const auto& v = e.speed_bounds;
            if (v[MoistureLevel::Med] > v[MoistureLevel::Low] || v[MoistureLevel::High] > v[MoistureLevel::Med]) {
                warnings_.push_back("equipment '" + e.id + "' speed bounds increase with moisture level");
            }
        }
    }

    in_.assign(static_cast<std::size_t>(n), {});
    out_.assign(static_cast<std::size_t>(n), {});
    std::set<std::pair<int, int>> seen;
    for (const auto& a : arcs_) {
        auto t = ids.find(a.from);
        auto h = ids.find(a.to);
        if (t == ids.end()) fail("arc references unknown equipment '" + a.from + "'");
        if (h == ids.end()) fail("arc references unknown equipment '" + a.to + "'");
        if (t->second == h->second) fail("self-loop at '" + a.from + "'");
        if (!seen.emplace(t->second, h->second).second) fail("duplicate arc " + a.from + " -> " + a.to);
        const int idx = static_cast<int>(tails_.size());
        tails_.push_back(t->second);
        heads_.push_back(h->second);
        out_[static_cast<std::size_t>(t->second)].push_back(idx);
        in_[static_cast<std::size_t>(h->second)].push_back(idx);
    }

    // Kahn's algorithm; lowest index first keeps the order deterministic.
    std::vector<int> indeg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) indeg[static_cast<std::size_t>(i)] = static_cast<int>(in_[static_cast<std::size_t>(i)].size());
    std::set<int> ready;
    for (int i = 0; i < n; ++i) {
        if (indeg[static_cast<std::size_t>(i)] == 0) ready.insert(i);
    }
    if (ready.size() != 1) fail("expected exactly one infeed node without predecessors, found " + std::to_string(ready.size()));
    source_ = *ready.begin();
    while (!ready.empty()) {
        const int i = *ready.begin();
        ready.erase(ready.begin());
        topo_.push_back(i);
        for (int a : out_[static_cast<std::size_t>(i)]) {
            const int h = heads_[static_cast<std::size_t>(a)];
            if (--indeg[static_cast<std::size_t>(h)] == 0) ready.insert(h);
        }
    }
    if (static_cast<int>(topo_.size()) != n) fail("equipment graph contains a cycle");

    auto rf = ids.find(reactor_feeder);
    if (rf == ids.end()) fail("reactor feeder '" + reactor_feeder + "' is not an equipment id");
    reactor_feeder_ = rf->second;
    if (!out_[static_cast<std::size_t>(reactor_feeder_)].empty()) fail("reactor feeder must have no outgoing arcs");
    if (equipment_[static_cast<std::size_t>(reactor_feeder_)].kind == EquipmentKind::Storage) {
        fail("reactor feeder cannot be a storage node");
    }
    for (int i = 0; i < n; ++i) {
        if (i != reactor_feeder_ && out_[static_cast<std::size_t>(i)].empty()) {
            fail("equipment '" + equipment_[static_cast<std::size_t>(i)].id + "' does not lead to the reactor feeder");
        }
    }
    // With a single source and a single sink every node lies on a source-sink path.

    const auto& src = equipment_[static_cast<std::size_t>(source_)];
    if (!src.system_feed_rate) fail("infeed node '" + src.id + "' needs system_feed_rate");
    if (src.kind == EquipmentKind::Storage) fail("infeed node cannot be a storage node");
    for (int i = 0; i < n; ++i) {
        if (i != source_ && equipment_[static_cast<std::size_t>(i)].system_feed_rate) {
            fail("system_feed_rate is only allowed on the infeed node");
        }
    }

    for (int i = 0; i < n; ++i) {
        if (equipment_[static_cast<std::size_t>(i)].kind == EquipmentKind::Storage) storage_.push_back(i);
    }

    if (!bypass_split.empty()) {
        auto s = ids.find(bypass_split);
        if (s == ids.end()) fail("bypass split '" + bypass_split + "' is not an equipment id");
        auto t = ids.find(bypass_target);
        if (t == ids.end()) fail("bypass target '" + bypass_target + "' is not an equipment id");
        bypass_split_ = s->second;
        const auto& outs = out_[static_cast<std::size_t>(bypass_split_)];
        if (outs.size() != 2) fail("bypass split must have exactly two outgoing arcs");
        for (int a : outs) {
            if (heads_[static_cast<std::size_t>(a)] == t->second) bypass_arc_ = a;
        }
        if (bypass_arc_ < 0) fail("bypass target is not a successor of the bypass split");
        if (equipment_[static_cast<std::size_t>(bypass_split_)].kind == EquipmentKind::Storage) {
            fail("bypass split cannot be a storage node");
        }
    } else if (!bypass_target.empty()) {
        fail("bypass target given without a bypass split");
    }

    for (int i : topo_) {
        auto& e = equipment_[static_cast<std::size_t>(i)];
        if (e.grinder == 1) {
            e.density = DensityContext::Grinder1;
            if (primary_grinder_ < 0) primary_grinder_ = i;
        } else if (e.grinder == 2) {
            e.density = DensityContext::Grinder2;
        } else {
            DensityContext ctx = DensityContext::DryBaseline;
            for (int a : in_[static_cast<std::size_t>(i)]) {
                ctx = std::max(ctx, equipment_[static_cast<std::size_t>(tails_[static_cast<std::size_t>(a)])].density);
            }
            e.density = ctx;
        }
    }

    incidence_.assign(static_cast<std::size_t>(n), std::vector<int>(tails_.size(), 0));
    for (std::size_t a = 0; a < tails_.size(); ++a) {
        incidence_[static_cast<std::size_t>(tails_[a])][a] = -1;
        incidence_[static_cast<std::size_t>(heads_[a])][a] = +1;
    }
}

std::vector<int> NetworkSpec::storage_in(int k) const {
    std::vector<int> r;
    for (int a : in_.at(static_cast<std::size_t>(storage_.at(static_cast<std::size_t>(k))))) {
        r.push_back(tails_[static_cast<std::size_t>(a)]);
    }
    return r;
}

std::vector<int> NetworkSpec::storage_out(int k) const {
    std::vector<int> r;
    for (int a : out_.at(static_cast<std::size_t>(storage_.at(static_cast<std::size_t>(k))))) {
        r.push_back(heads_[static_cast<std::size_t>(a)]);
    }
    return r;
}

std::vector<int> NetworkSpec::transport_nodes() const {
    std::vector<int> r;
    for (int i = 0; i < num_nodes(); ++i) {
        if (equipment_[static_cast<std::size_t>(i)].kind == EquipmentKind::Transport) r.push_back(i);
    }
    return r;
}

std::vector<std::vector<int>> NetworkSpec::incidence_transport() const {
    std::vector<std::vector<int>> r;
    for (int i : transport_nodes()) r.push_back(incidence_[static_cast<std::size_t>(i)]);
    return r;
}

}  // namespace biofeed
