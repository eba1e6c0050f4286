#pragma once

#include <cstdint>

namespace pmtk {

/// SplitMix64 (Steele/Lea/Vigna, public domain): a single documented
/// finalizer with identical output on every platform. Streams derived
/// from distinct seeds are independent for simulation purposes.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Fair coin: top bit of the next output.
    bool next_coin() { return (next() >> 63) != 0; }

    /// Uniform double in [0,1) from the top 53 bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Stream seed for (base seed, stream index): the (index+1)-th output of a
/// SplitMix64 run from the base seed. Distinct indices give decorrelated
/// streams and the whole ensemble is reproducible from one seed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace pmtk
