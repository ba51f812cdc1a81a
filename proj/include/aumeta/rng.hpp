#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aumeta/errors.hpp"

namespace aumeta {

/// SplitMix64: tiny counter-based generator with a one-word state. Chosen
/// over std::mt19937 because its output is trivially reproducible across
/// platforms and standard libraries, which the deterministic-training
/// guarantees lean on. Reference: Steele, Lea, Flood (2014), as published in
/// the Java SplittableRandom documentation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). The modulo bias is below 2^-53 for any n
    /// this library ever passes; not worth a rejection loop.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw ValidationError("below(0) is undefined");
        return next() % n;
    }

    /// In-place Fisher-Yates shuffle, iterating from the back.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(items[i], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace aumeta
