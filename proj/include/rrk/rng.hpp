#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace rrk {

// Seeded generator used everywhere randomness is needed.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Distributions are derived here rather than through <random>'s
// distribution classes, whose algorithms are implementation-defined, so a given
// seed produces the same draws on every platform and standard library.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) by rejection, bound > 0.
    std::size_t uniform_index(std::size_t bound);

    // Inverse-CDF draw from a probability vector. The final index absorbs any
    // rounding shortfall of the cumulative sum.
    std::size_t categorical(std::span<const double> probs);

private:
    std::mt19937_64 engine_;
};

}  // namespace rrk
