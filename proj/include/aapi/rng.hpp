#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace aapi {

/// Counter-based SplitMix64 stream.
///
/// The i-th output is mix64(key + (i + 1) * 0x9E3779B97F4A7C15), so a stream is
/// fully described by (key, counter) and can be advanced or forked without
/// touching shared state. All distributions below are implemented on top of
/// the raw 64-bit output so that traces are bit-identical across standard
/// libraries (std::uniform_real_distribution and friends are not).
///
/// Seeding: run i of a suite uses key = base_seed + i; sub-streams (environment,
/// agent, sampling) are forked with fork(tag), which hashes the tag into a new key.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : key_(seed) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) noexcept;

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one cached spare value).
    double normal() noexcept;

    /// Samples index i with probability probs[i]. Probabilities must sum to ~1.
    std::size_t categorical(std::span<const double> probs) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Independent stream derived from this stream's key and a tag.
    [[nodiscard]] Rng fork(std::uint64_t tag) const noexcept;

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace aapi
