#include "biofeed/physics/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace biofeed {

namespace {

PerLevel<double> lv(double l, double m, double h) { return PerLevel<double>{{l, m, h}}; }

void check_pct(const std::string& what, const PerLevel<double>& v) {
    for (auto l : kAllLevels) {
        if (!(v[l] >= 0.0 && v[l] < 100.0)) throw std::invalid_argument(what + " must lie in [0,100)");
    }
}

}  // namespace

PhysicsTables PhysicsTables::defaults() {
    PhysicsTables t;
    t.grinder1 = {56.183, 65.312, 8.473, lv(1.95, 2.35, 1.75), lv(12.5, 12.0, 10.0)};
    t.grinder2 = {186.348, 206.1697, 110.302, lv(0.65, 0.70, 0.60), lv(6.5, 7.5, 9.5)};
    t.bypass = lv(0.857, 0.811, 0.928);
    t.losses["grinder1"] = {lv(0.50, 3.00, 4.77), lv(1.5, 1.5, 1.5)};
    t.losses["grinder2"] = {lv(0.70, 3.00, 4.00), lv(0.5, 0.5, 0.5)};
    t.losses["pellet_mill"] = {lv(0.00, 1.50, 3.90), std::nullopt};
    t.dry_density = 203.04;
    return t;
}

void PhysicsTables::validate() const {
    for (const auto* g : {&grinder1, &grinder2}) {
        if (!std::isfinite(g->intercept) || !std::isfinite(g->moisture_slope) || !std::isfinite(g->particle_slope)) {
            throw std::invalid_argument("regression coefficients must be finite");
        }
        for (auto l : kAllLevels) {
            if (!(g->rho50[l] > 0.0)) throw std::invalid_argument("rho50 must be positive");
        }
    }
    for (auto l : kAllLevels) {
        if (!(bypass[l] >= 0.0 && bypass[l] <= 1.0)) throw std::invalid_argument("bypass fractions must lie in [0,1]");
    }
    for (const auto& [id, row] : losses) {
        check_pct("moisture loss for '" + id + "'", row.moisture_pct);
        if (row.dry_matter_pct) check_pct("dry matter loss for '" + id + "'", *row.dry_matter_pct);
    }
    if (!(dry_density > 0.0)) throw std::invalid_argument("dry density must be positive");
}

Physics::Physics() : Physics(PhysicsTables::defaults()) {}

Physics::Physics(PhysicsTables tables) : tables_(std::move(tables)) { tables_.validate(); }

double Physics::density_after_grinder(int grinder, double m, MoistureLevel level) const {
    if (grinder != 1 && grinder != 2) throw std::invalid_argument("grinder must be 1 or 2");
    const auto& c = grinder == 1 ? tables_.grinder1 : tables_.grinder2;
    const double d = c.intercept + c.moisture_slope * m - c.particle_slope * c.rho50[level];
    if (!(d > 0.0)) {
        std::ostringstream os;
        os << "grinder " << grinder << " density " << d << " kg/m^3 is not positive (intercept " << c.intercept
           << ", moisture slope " << c.moisture_slope << ", particle slope " << c.particle_slope << ", rho50 "
           << c.rho50[level] << ", m " << m << ")";
        throw std::domain_error(os.str());
    }
    return d;
}

double Physics::density(DensityContext ctx, double m, MoistureLevel level) const {
    switch (ctx) {
        case DensityContext::DryBaseline: return tables_.dry_density;
        case DensityContext::Grinder1: return density_after_grinder(1, m, level);
        case DensityContext::Grinder2: return density_after_grinder(2, m, level);
    }
    return tables_.dry_density;
}

double Physics::flow_coefficient(const EquipmentSpec& eq, double m, MoistureLevel level) const {
    if (eq.geometry == 0.0) return 0.0;
    return eq.geometry * density(eq.density, m, level) / kKgPerDryTon;
}

std::pair<double, double> Physics::bypass_split(double mass, MoistureLevel level) const {
    const double b = tables_.bypass[level];
    // The larger share is the product; the smaller one is an exact difference.
    if (b >= 0.5) {
        const double to_bypass = b * mass;
        return {to_bypass, mass - to_bypass};
    }
    const double to_g2 = (1.0 - b) * mass;
    return {mass - to_g2, to_g2};
}

MassState Physics::apply_losses(double mass, double m, const std::string& equipment, MoistureLevel level) const {
    auto it = tables_.losses.find(equipment);
    if (it == tables_.losses.end()) return {mass, m};
    const auto& row = it->second;
    const double dml = row.dry_matter_pct ? (*row.dry_matter_pct)[level] : 0.0;
    return {mass * (1.0 - dml / 100.0), std::max(0.0, m - row.moisture_pct[level] / 100.0)};
}

double Physics::retention(const std::string& equipment, MoistureLevel level) const {
    auto it = tables_.losses.find(equipment);
    if (it == tables_.losses.end() || !it->second.dry_matter_pct) return 1.0;
    return 1.0 - (*it->second.dry_matter_pct)[level] / 100.0;
}

double Physics::storage_capacity(double volume, double m, MoistureLevel level) const {
    if (volume == 0.0) return 0.0;
    return volume * density_after_grinder(2, m, level) / kKgPerDryTon;
}

}  // namespace biofeed
