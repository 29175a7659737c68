#pragma once

#include <deque>
#include <iosfwd>
#include <memory>
#include <shared_mutex>
#include <span>
#include <vector>

namespace biofeed {

/// theta >= intercept + gradient . I, with I the inventory leaving the stage.
struct Cut {
    double intercept = 0.0;
    std::vector<double> gradient;
    /// Training iteration that produced the cut.
    int iteration = 0;

    [[nodiscard]] double evaluate(std::span<const double> state) const;

    friend bool operator==(const Cut&, const Cut&) = default;
};

/// Builds the cut through (trial, value) with the given slope.
[[nodiscard]] Cut make_cut(double value, std::span<const double> gradient, std::span<const double> trial,
                           int iteration);

/// Append-only cut collections, one per stage. Pool t bounds the cost-to-go
/// after stage t. Appends take an exclusive lock; readers see a consistent
/// prefix through for_each/snapshot.
class CutPool {
public:
    CutPool() = default;
    CutPool(int stages, int states);
    CutPool(const CutPool& other);
    CutPool& operator=(const CutPool& other);

    [[nodiscard]] int num_stages() const noexcept { return static_cast<int>(stages_.size()); }
    [[nodiscard]] int num_states() const noexcept { return states_; }
    [[nodiscard]] std::size_t size(int stage) const;
    [[nodiscard]] std::size_t total_size() const;

    /// Throws std::invalid_argument on a gradient of the wrong dimension or non-finite data.
    void append(int stage, Cut cut);

    /// Copy of the current cuts of one stage.
    [[nodiscard]] std::vector<Cut> snapshot(int stage) const;

    /// Calls f(span of cuts) while holding a shared lock on the stage.
    template <class F>
    decltype(auto) read(int stage, F&& f) const {
        const auto& s = at(stage);
        std::shared_lock lock(s->mutex);
        return f(std::span<const Cut>(s->cuts.data(), s->cuts.size()));
    }

    /// Largest cut value at the state, or 0 when the stage has no cuts.
    [[nodiscard]] double evaluate(int stage, std::span<const double> state) const;

    friend bool operator==(const CutPool& a, const CutPool& b);

private:
    struct Stage {
        mutable std::shared_mutex mutex;
        std::vector<Cut> cuts;
    };
    [[nodiscard]] const std::unique_ptr<Stage>& at(int stage) const;

    std::vector<std::unique_ptr<Stage>> stages_;
    int states_ = 0;
};

/// Text format, version 1:
///   biofeed-cuts 1
///   stages <T> states <n>
///   <stage> <iteration> <intercept> <g_1> ... <g_n>     (one line per cut)
/// Numbers use shortest round-trip formatting, so a reload is bit-exact.
void write_cuts(const CutPool& pool, std::ostream& out);
/// Throws std::runtime_error with the offending line number on malformed input.
[[nodiscard]] CutPool read_cuts(std::istream& in);

}  // namespace biofeed
