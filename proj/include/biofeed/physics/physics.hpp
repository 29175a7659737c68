#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "biofeed/model/moisture.hpp"
#include "biofeed/model/network.hpp"

namespace biofeed {

/// kg per dry ton (short ton).
inline constexpr double kKgPerDryTon = 907.18474;

/// d = intercept + moisture_slope * m - particle_slope * rho50, m as a fraction.
struct RegressionCoefficients {
    double intercept = 0.0;
    double moisture_slope = 0.0;
    double particle_slope = 0.0;
    /// Median particle size after the grinder (mm).
    PerLevel<double> rho50{};
    /// Particle uniformity; informational only.
    PerLevel<double> rho90_rho10{};

    friend bool operator==(const RegressionCoefficients&, const RegressionCoefficients&) = default;
};

struct LossRow {
    /// Percentage points of moisture removed.
    PerLevel<double> moisture_pct{};
    /// Percent of dry matter lost; grinders only.
    std::optional<PerLevel<double>> dry_matter_pct;

    friend bool operator==(const LossRow&, const LossRow&) = default;
};

struct PhysicsTables {
    RegressionCoefficients grinder1;
    RegressionCoefficients grinder2;
    /// Fraction of grinder-1 output routed around grinder 2.
    PerLevel<double> bypass{};
    /// Keyed by equipment id.
    std::map<std::string, LossRow> losses;
    /// Density used upstream of the first grinder (kg/m^3).
    double dry_density = 203.04;

    /// Tables 7-10 of the reference line.
    [[nodiscard]] static PhysicsTables defaults();
    void validate() const;

    friend bool operator==(const PhysicsTables&, const PhysicsTables&) = default;
};

struct MassState {
    double mass;
    double moisture;
};

/// Material model over immutable tables.
class Physics {
public:
    Physics();
    explicit Physics(PhysicsTables tables);

    [[nodiscard]] const PhysicsTables& tables() const noexcept { return tables_; }

    /// Bulk density (kg/m^3) after grinder 1 or 2 at moisture fraction m.
    /// Throws std::domain_error when the regression yields a nonpositive density.
    [[nodiscard]] double density_after_grinder(int grinder, double m, MoistureLevel level) const;

    /// Density in the equipment's context; m is the moisture entering that context's grinder.
    [[nodiscard]] double density(DensityContext ctx, double m, MoistureLevel level) const;

    /// Dry tons moved per speed unit per hour: geometry * density / kg-per-dt.
    [[nodiscard]] double flow_coefficient(const EquipmentSpec& eq, double m, MoistureLevel level) const;

    /// (to_bypass, to_grinder2); the two parts add up to mass exactly.
    [[nodiscard]] std::pair<double, double> bypass_split(double mass, MoistureLevel level) const;

    /// Dry matter and moisture after passing the equipment; identity when the
    /// equipment has no loss row.
    [[nodiscard]] MassState apply_losses(double mass, double m, const std::string& equipment,
                                         MoistureLevel level) const;

    /// Multiplicative dry-matter retention of the equipment, 1 without a loss row.
    [[nodiscard]] double retention(const std::string& equipment, MoistureLevel level) const;

    /// Dry tons held by a storage volume at grinder-2 density.
    [[nodiscard]] double storage_capacity(double volume, double m, MoistureLevel level) const;

private:
    PhysicsTables tables_;
};

}  // namespace biofeed
