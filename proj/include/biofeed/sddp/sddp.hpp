#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "biofeed/config/instance.hpp"
#include "biofeed/stage/cuts.hpp"
#include "biofeed/stage/stage_lp.hpp"
#include "biofeed/stage/stage_model.hpp"

namespace biofeed {

/// Two-sided 95% normal quantile, also the one-sided 0.025 quantile.
inline constexpr double kZ975 = 1.959964;

struct TrainerConfig {
    int realizations = 100;
    int forward_paths = 1;
    /// Solve every grid path in each forward pass instead of sampling
    /// (practical only when the grid has few paths).
    bool exhaustive_forward = false;
    double alpha = 0.025;
    double stall_eps = 1e-4;
    int stall_window = 50;
    int max_iters = 2000;
    /// Stop when UB - LB <= gap_tol; negative disables the check.
    double gap_tol = -1.0;
    /// Paths used for the final statistical upper bound; the grid is
    /// enumerated instead when it has at most enumerate_cap paths.
    int bound_paths = 500;
    int enumerate_cap = 4096;
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const;
    /// Settings from a config file; gap_tol 0 there means disabled.
    [[nodiscard]] static TrainerConfig from(const RunSettings& run, std::uint64_t seed);
};

/// Moisture values per stage shared by training (SAA grids). Stage 0 holds
/// the level mean only.
struct RealizationGrid {
    std::vector<std::vector<double>> moisture;

    [[nodiscard]] int num_stages() const noexcept { return static_cast<int>(moisture.size()); }
    /// Number of distinct stage-wise paths, saturating at `cap + 1`.
    [[nodiscard]] std::int64_t path_count(std::int64_t cap) const;
};

[[nodiscard]] RealizationGrid sample_grid(const StageModel& model, int realizations, std::uint64_t seed);

/// Path index k (mixed radix over grid sizes, stage 0 most significant) to moisture values.
[[nodiscard]] std::vector<double> grid_path(const RealizationGrid& grid, std::int64_t k);

struct Policy {
    StagePlan plan;
    RealizationGrid grid;
    CutPool cuts;
    std::string fingerprint;
    std::uint64_t seed = 0;
};

/// Hash of everything that determines training: model data, plan and trainer settings.
[[nodiscard]] std::string fingerprint(const StageModel& model, const TrainerConfig& config);

enum class StopReason { Continue, BoundStall, GapClosed, MaxIter };
[[nodiscard]] std::string to_string(StopReason r);

struct StatisticalBound {
    double mean = 0.0;
    double stddev = 0.0;
    double upper = 0.0;
    int samples = 0;
    /// True when fewer than two samples make the width infinite.
    bool infinite_width = false;
};

struct BoundsLog {
    std::vector<double> lower_bound;
    std::vector<double> forward_mean;
    std::vector<double> forward_variance;
    std::vector<double> forward_upper;
    StatisticalBound final_bound;
    /// True when final_bound came from enumerating every grid path.
    bool final_bound_exact = false;
    StopReason stop = StopReason::Continue;

    [[nodiscard]] int iterations() const noexcept { return static_cast<int>(lower_bound.size()); }
};

/// mean, sample stddev (1/(M-1)) and mean + z * stddev / sqrt(M) with z the
/// upper alpha quantile. M = 1 returns the mean with an infinite-width flag.
[[nodiscard]] StatisticalBound statistical_upper_bound(const std::vector<double>& costs, double alpha);

/// Upper alpha quantile of the standard normal.
[[nodiscard]] double normal_upper_quantile(double alpha);

[[nodiscard]] StopReason check_termination(const BoundsLog& log, const TrainerConfig& config);

struct PathResult {
    double cost = 0.0;
    std::vector<double> stage_cost;
    /// Inventory leaving each stage (stage-major, storage-minor).
    std::vector<std::vector<double>> states;
    std::vector<double> shortfall;
    std::vector<double> delivered;
    std::vector<double> demand;
    int clamps = 0;
};

/// Rolls the stage problems forward along one moisture path with the cuts
/// currently in the pool. With period k > 0, stage t reads pool t mod k and
/// treats t mod k = k-1 as a horizon end (a k-stage policy replayed).
[[nodiscard]] PathResult simulate_path(const StageModel& model, const CutPool& cuts,
                                       const std::vector<double>& moisture, std::vector<double> initial_state,
                                       int period = 0);

struct ForwardResult {
    std::vector<PathResult> paths;
};

/// Simulates each moisture path with the current cuts.
[[nodiscard]] ForwardResult forward_pass(const StageModel& model, const CutPool& cuts,
                                         const std::vector<std::vector<double>>& paths, int workers = 1);

/// Appends one averaged cut per trial path to pools T-2..0, walking
/// backwards so each cut sees the freshest downstream pool.
void backward_pass(const StageModel& model, const RealizationGrid& grid, CutPool& cuts,
                   const ForwardResult& forward, int iteration, int workers = 1);

/// Stage-0 problem value at the initial state with the current cuts.
[[nodiscard]] double lower_bound(const StageModel& model, const CutPool& cuts);

struct TrainResult {
    Policy policy;
    BoundsLog log;
};

/// Throws StageInfeasible with stage and state diagnostics when a stage problem has no solution.
[[nodiscard]] TrainResult train(const StageModel& model, const TrainerConfig& config);

class FingerprintMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text format: header 'biofeed-policy 1', 'fingerprint <hex> seed <n>', the plan,
/// the grid, then the cut section of write_cuts.
void save_policy(const Policy& policy, std::ostream& out);
/// Throws FingerprintMismatch when the stored fingerprint differs from `expected_fingerprint`
/// and std::runtime_error on malformed input.
[[nodiscard]] Policy load_policy(std::istream& in, const std::string& expected_fingerprint);

}  // namespace biofeed
