#include "biofeed/model/moisture.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>
#include <string>

namespace biofeed {

std::string_view to_string(MoistureLevel level) noexcept {
    switch (level) {
        case MoistureLevel::Low: return "low";
        case MoistureLevel::Med: return "med";
        case MoistureLevel::High: return "high";
    }
    return "?";
}

char level_code(MoistureLevel level) noexcept {
    switch (level) {
        case MoistureLevel::Low: return 'L';
        case MoistureLevel::Med: return 'M';
        case MoistureLevel::High: return 'H';
    }
    return '?';
}

MoistureLevel parse_level(std::string_view text) {
    std::string lower;
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "l" || lower == "low") return MoistureLevel::Low;
    if (lower == "m" || lower == "med" || lower == "medium") return MoistureLevel::Med;
    if (lower == "h" || lower == "high") return MoistureLevel::High;
    throw std::invalid_argument("unknown moisture level '" + std::string(text) + "'");
}

MoistureModel::MoistureModel()
    : MoistureModel(PerLevel<MoistureRange>{{MoistureRange{0.03, 0.12}, MoistureRange{0.12, 0.20},
                                             MoistureRange{0.20, 0.30}}}) {}

MoistureModel::MoistureModel(PerLevel<MoistureRange> ranges) : ranges_(ranges) { validate(); }

double MoistureModel::sample(MoistureLevel level, std::mt19937_64& rng) const {
    const auto& r = ranges_[level];
    const double u = unit_uniform(rng);
    if (r.hi == r.lo) return r.lo;
    return std::min(r.hi, r.lo + (r.hi - r.lo) * u);
}

void MoistureModel::validate() const {
    for (auto l : kAllLevels) {
        const auto& r = ranges_[l];
        if (!(r.lo > 0.0 && r.hi < 1.0 && r.lo <= r.hi)) {
            throw std::invalid_argument("moisture range for level " + std::string(to_string(l)) +
                                        " must satisfy 0 < lo <= hi < 1");
        }
    }
    const auto& low = ranges_[MoistureLevel::Low];
    const auto& med = ranges_[MoistureLevel::Med];
    const auto& high = ranges_[MoistureLevel::High];
    if (low.hi > med.lo || med.hi > high.lo) {
        throw std::invalid_argument("moisture ranges overlap beyond shared endpoints");
    }
}

double sample_moisture(const MoistureModel& model, MoistureLevel level, std::mt19937_64& rng) {
    return model.sample(level, rng);
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_index: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % bound);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

}  // namespace biofeed
