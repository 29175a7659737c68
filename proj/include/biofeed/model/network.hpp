#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biofeed/model/moisture.hpp"

namespace biofeed {

enum class EquipmentKind { Processing, Transport, Storage };

/// Which density regression describes material passing through a node.
enum class DensityContext { DryBaseline, Grinder1, Grinder2 };

[[nodiscard]] std::string_view to_string(EquipmentKind kind) noexcept;
[[nodiscard]] std::string_view to_string(DensityContext ctx) noexcept;

struct EquipmentSpec {
    std::string id;
    EquipmentKind kind = EquipmentKind::Processing;
    /// m^3 per speed-unit per hour.
    double geometry = 0.0;
    PerLevel<double> speed_bounds{};
    /// Mass-rate cap in dt/hr.
    std::optional<PerLevel<double>> infeed_limit;
    /// m^3, storage nodes only.
    double storage_volume = 0.0;
    /// dt/hr processed by the line at each level; sets stage duration. Head node only.
    std::optional<PerLevel<double>> system_feed_rate;
    /// 1 or 2 when the node is a grinder with a density regression, else 0.
    int grinder = 0;
    /// Resolved by NetworkSpec from the graph; user-supplied values are overwritten.
    DensityContext density = DensityContext::DryBaseline;
};

struct Arc {
    std::string from;
    std::string to;
};

/// Equipment graph of the preprocessing line. Validated on construction and
/// immutable afterwards.
class NetworkSpec {
public:
    NetworkSpec(std::vector<EquipmentSpec> equipment, std::vector<Arc> arcs, std::string reactor_feeder,
                std::string bypass_split = {}, std::string bypass_target = {});

    [[nodiscard]] int num_nodes() const noexcept { return static_cast<int>(equipment_.size()); }
    [[nodiscard]] int num_arcs() const noexcept { return static_cast<int>(tails_.size()); }
    [[nodiscard]] const EquipmentSpec& node(int i) const { return equipment_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] const std::vector<EquipmentSpec>& equipment() const noexcept { return equipment_; }
    [[nodiscard]] const std::vector<Arc>& arcs() const noexcept { return arcs_; }
    [[nodiscard]] int arc_tail(int a) const { return tails_.at(static_cast<std::size_t>(a)); }
    [[nodiscard]] int arc_head(int a) const { return heads_.at(static_cast<std::size_t>(a)); }
    /// Throws std::out_of_range for an unknown id.
    [[nodiscard]] int index_of(std::string_view id) const;

    [[nodiscard]] int source() const noexcept { return source_; }
    [[nodiscard]] int reactor_feeder() const noexcept { return reactor_feeder_; }
    /// Screening split node, or -1 when the line has none.
    [[nodiscard]] int bypass_split() const noexcept { return bypass_split_; }
    /// Arc leaving the split toward the bypass, or -1.
    [[nodiscard]] int bypass_arc() const noexcept { return bypass_arc_; }
    /// First node with a grinder-1 regression, or -1.
    [[nodiscard]] int primary_grinder() const noexcept { return primary_grinder_; }

    [[nodiscard]] const std::vector<int>& in_arcs(int i) const { return in_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] const std::vector<int>& out_arcs(int i) const { return out_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] const std::vector<int>& topological_order() const noexcept { return topo_; }

    /// Storage node indices in declaration order; the state vector follows this order.
    [[nodiscard]] const std::vector<int>& storage_nodes() const noexcept { return storage_; }
    [[nodiscard]] int num_storage() const noexcept { return static_cast<int>(storage_.size()); }
    /// Nodes feeding / fed by storage node k (k indexes storage_nodes()).
    [[nodiscard]] std::vector<int> storage_in(int k) const;
    [[nodiscard]] std::vector<int> storage_out(int k) const;

    /// Node-arc incidence: -1 at the tail, +1 at the head.
    [[nodiscard]] const std::vector<std::vector<int>>& incidence_full() const noexcept { return incidence_; }
    /// Rows of incidence_full() for transport nodes only (in transport_nodes() order).
    [[nodiscard]] std::vector<std::vector<int>> incidence_transport() const;
    [[nodiscard]] std::vector<int> transport_nodes() const;

    /// Non-fatal findings from validation, e.g. speed bounds rising with moisture.
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    void validate_and_index(const std::string& reactor_feeder, const std::string& bypass_split,
                            const std::string& bypass_target);

    std::vector<EquipmentSpec> equipment_;
    std::vector<Arc> arcs_;
    std::vector<int> tails_, heads_;
    std::vector<std::vector<int>> in_, out_;
    std::vector<int> topo_;
    std::vector<int> storage_;
    std::vector<std::vector<int>> incidence_;
    std::vector<std::string> warnings_;
    int source_ = -1;
    int reactor_feeder_ = -1;
    int bypass_split_ = -1;
    int bypass_arc_ = -1;
    int primary_grinder_ = -1;
};

}  // namespace biofeed
