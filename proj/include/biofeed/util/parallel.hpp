#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace biofeed {

/// Runs f(i) for i in [0, n) on up to `workers` threads. Each index writes
/// only its own result slot, so callers reduce in index order afterwards.
/// The first exception (by index) is rethrown.
template <class F>
void parallel_for(int n, int workers, F&& f) {
    if (n <= 0) return;
    workers = std::clamp(workers, 1, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) {
                try {
                    f(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Independent engine for a (purpose, index) pair under a master seed.
[[nodiscard]] inline std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0,
                                                 std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(a),
                      static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

/// Worker count from the BIOFEED_WORKERS environment variable, or `fallback`.
[[nodiscard]] int workers_from_env(int fallback);

/// 64-bit FNV-1a of the text as 16 hex digits.
[[nodiscard]] std::string fnv1a_hex(const std::string& text);

}  // namespace biofeed
