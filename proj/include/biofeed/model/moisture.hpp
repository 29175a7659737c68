#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace biofeed {

enum class MoistureLevel : std::uint8_t { Low = 0, Med = 1, High = 2 };

inline constexpr std::array<MoistureLevel, 3> kAllLevels{MoistureLevel::Low, MoistureLevel::Med, MoistureLevel::High};

[[nodiscard]] std::string_view to_string(MoistureLevel level) noexcept;
/// Short code used in sequences and CSVs: L, M, H.
[[nodiscard]] char level_code(MoistureLevel level) noexcept;
/// Accepts L/M/H, low/med/medium/high (case-insensitive). Throws std::invalid_argument.
[[nodiscard]] MoistureLevel parse_level(std::string_view text);

/// One value per moisture level, indexed by the level.
template <class T>
struct PerLevel {
    std::array<T, 3> values{};

    [[nodiscard]] constexpr T& operator[](MoistureLevel l) noexcept { return values[static_cast<std::size_t>(l)]; }
    [[nodiscard]] constexpr const T& operator[](MoistureLevel l) const noexcept {
        return values[static_cast<std::size_t>(l)];
    }
    friend bool operator==(const PerLevel&, const PerLevel&) = default;
};

/// Closed interval of moisture fractions.
struct MoistureRange {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double mean() const noexcept { return 0.5 * (lo + hi); }
    [[nodiscard]] bool contains(double m) const noexcept { return m >= lo && m <= hi; }
    friend bool operator==(const MoistureRange&, const MoistureRange&) = default;
};

/// Uniform moisture within each level's range; stages draw independently.
class MoistureModel {
public:
    MoistureModel();
    explicit MoistureModel(PerLevel<MoistureRange> ranges);

    [[nodiscard]] const MoistureRange& range(MoistureLevel level) const noexcept { return ranges_[level]; }
    [[nodiscard]] double mean(MoistureLevel level) const noexcept { return ranges_[level].mean(); }

    /// Uniform draw on the level's range from 53 random bits; a point range
    /// returns its endpoint exactly.
    [[nodiscard]] double sample(MoistureLevel level, std::mt19937_64& rng) const;

    /// Throws std::invalid_argument unless every range lies in (0,1) and the
    /// ranges are ordered LOW <= MED <= HIGH, touching at most at endpoints.
    void validate() const;

    friend bool operator==(const MoistureModel&, const MoistureModel&) = default;

private:
    PerLevel<MoistureRange> ranges_;
};

/// Free-function form of MoistureModel::sample.
[[nodiscard]] double sample_moisture(const MoistureModel& model, MoistureLevel level, std::mt19937_64& rng);

/// Uniform double in [0,1) from the top 53 bits of one engine draw.
[[nodiscard]] inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection; portable across standard libraries.
[[nodiscard]] std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound);

}  // namespace biofeed
