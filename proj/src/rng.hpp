#pragma once

/// Counter-based random number generation (Philox4x32-10).
///
/// Every random draw in the library comes from an RngStream addressed by
/// (seed, purpose, stream id). Streams are stateless to construct and
/// independent of each other, so parallel schedules cannot change results:
/// the value of draw k of a stream depends only on the stream address and k.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace ekb {

/// Purpose tag separating independent sub-streams derived from one seed.
enum class StreamPurpose : std::uint32_t {
    TruthField = 1,   // reference permeability field
    InitField = 2,    // initial ensemble member fields (stream id = member)
    ObsPerturb = 3,   // measurement perturbations (stream id = time index)
    FieldSample = 4,  // standalone field sampling
    Resample = 5,     // subset resampling in the statistics engine
    Test = 99,        // reserved for test code
};

namespace detail {

struct PhiloxBlock {
    std::array<std::uint32_t, 4> ctr;
    std::array<std::uint32_t, 2> key;

    static inline void round(std::array<std::uint32_t, 4>& c,
                             const std::array<std::uint32_t, 2>& k) {
        const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
        const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
        const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const std::uint32_t hi1 = std::uint64_t(p1) >> 32, lo1 = std::uint32_t(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    std::array<std::uint32_t, 4> operator()() const {
        auto c = ctr;
        auto k = key;
        for (int r = 0; r < 10; ++r) {
            round(c, k);
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        return c;
    }
};

} // namespace detail

/// Deterministic 64-bit seed combiner (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

/// Stable 64-bit string hash (FNV-1a); used for id-keyed seed derivation
/// and content hashes, never for anything cryptographic.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

class RngStream {
public:
    RngStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t stream_id)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          purpose_(std::uint32_t(purpose)),
          stream_lo_(std::uint32_t(stream_id)),
          stream_hi_(std::uint32_t(stream_id >> 32)) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in (0, 1], 53 significant bits.
    double next_double() {
        return double((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), n >= 1. Unbiased via rejection.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal deviate (Box-Muller; fixed two-uniform draw pattern).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    void refill() {
        detail::PhiloxBlock b{{counter_, purpose_, stream_lo_, stream_hi_}, key_};
        block_ = b();
        ++counter_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t purpose_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint32_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ekb
