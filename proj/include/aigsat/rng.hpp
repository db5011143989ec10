#pragma once

#include <cstdint>

namespace aigsat {

// SplitMix64: counter-based generator (output = mix of an arithmetic
// counter), bit-exact across platforms. Used everywhere randomness is
// needed so that seeds reproduce byte-identical artifacts.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1) with 53 bits of mantissa
    double next_u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool next_bool(double p) { return next_u01() < p; }

    // uniform integer in [0, n), n >= 1; rejection-free modulo is fine here
    // since n is tiny compared to 2^64
    uint64_t next_below(uint64_t n) { return next() % n; }

private:
    uint64_t state_;
};

// deterministic seed derivation for (stream, substream, ...) keys
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    SplitMix64 g(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
    return g.next();
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

} // namespace aigsat
