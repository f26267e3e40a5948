#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace triage {

/// Seeded generator with platform-stable draws.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The <random> distributions are not, so the conversions to
/// doubles and bounded integers live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform on [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of `text`.
std::uint64_t hash_text(std::string_view text);

/// Folds `value` into `seed`; stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t value);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

} // namespace triage
