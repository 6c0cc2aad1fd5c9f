#pragma once

#include <cstdint>

namespace pbt {

// Counter-based random stream. Draw i is a pure function of (seed, i), so a
// persisted cursor resumes the stream exactly without replaying past draws.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t cursor = 0)
        : seed_(seed), cursor_(cursor) {}

    std::uint64_t next_u64() {
        std::uint64_t state = seed_ + (++cursor_) * 0x9E3779B97F4A7C15ULL;
        return mix(state);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, n). n must be > 0. Modulo bias is negligible for the
    // pool sizes used here (< 2^-50).
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    std::uint64_t cursor() const { return cursor_; }
    std::uint64_t seed() const { return seed_; }

    // splitmix64 finalizer.
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xBF58476D1CE4E5B9ULL;
        x ^= x >> 27;
        x *= 0x94D049BB133111EBULL;
        x ^= x >> 31;
        return x;
    }

private:
    std::uint64_t seed_;
    std::uint64_t cursor_;
};

// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return RandomStream::mix(base ^ RandomStream::mix(salt + 0x632BE59BD9B4E019ULL));
}

}  // namespace pbt
