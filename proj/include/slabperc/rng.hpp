#pragma once

// Counter-based randomness (Philox 4x32-10, Salmon et al. SC 2011).
//
// Every random quantity in the artifact is a pure function of
// (master seed, stream id, counter), which gives order-independent
// parallelism and exact common-random-number coupling across model
// parameters: the same uniform is compared against different thresholds.

#include <array>
#include <cstdint>

namespace slabperc {

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0, std::uint32_t k1) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

} // namespace detail

// One 128-bit block of four 32-bit uniforms.
inline std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                               std::uint64_t ctr_lo,
                                               std::uint64_t ctr_hi) {
    std::array<std::uint32_t, 4> x = {
        static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
        static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        detail::philox_round(x, k0, k1);
        k0 += detail::kPhiloxW0;
        k1 += detail::kPhiloxW1;
    }
    return x;
}

// Maps a 32-bit word to (0,1); never returns an exact 0 or 1, which the
// heavy-tail inversions rely on.
inline double unit_open(std::uint32_t w) {
    return (static_cast<double>(w) + 0.5) * (1.0 / 4294967296.0);
}

// Edge-open thresholds are 33-bit so that p = 1 opens everything.
inline std::uint64_t open_threshold(double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return std::uint64_t{1} << 32;
    return static_cast<std::uint64_t>(p * 4294967296.0 + 0.5);
}

// The per-edge coupling field of one replica: value(e) is word e&3 of the
// Philox block indexed by e>>2, keyed by (seed, replica). Sequential edge
// scans reuse the cached block four times.
class UniformField {
public:
    UniformField(std::uint64_t seed, std::uint64_t replica)
        : seed_(seed), replica_(replica) {}

    std::uint32_t word(std::uint64_t edge) const {
        std::uint64_t block = edge >> 2;
        if (block != cached_block_) {
            cache_ = philox4x32(seed_, block, replica_);
            cached_block_ = block;
        }
        return cache_[edge & 3];
    }

    double value(std::uint64_t edge) const { return unit_open(word(edge)); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t replica() const { return replica_; }

private:
    std::uint64_t seed_;
    std::uint64_t replica_;
    mutable std::uint64_t cached_block_ = ~std::uint64_t{0};
    mutable std::array<std::uint32_t, 4> cache_{};
};

// Sequential stream for renewal sampling and other one-dimensional draws.
// Distinct stream ids are independent; the id is folded into the counter's
// high half, so streams never collide with edge fields of the same seed
// (edge fields use the replica slot, streams tag the top bit).
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), hi_((std::uint64_t{1} << 63) | stream_id) {}

    std::uint32_t next_u32() {
        std::uint64_t i = pos_++;
        if ((i >> 2) != cached_block_) {
            cache_ = philox4x32(seed_, i >> 2, hi_);
            cached_block_ = i >> 2;
        }
        return cache_[i & 3];
    }

    // Uniform on the open interval (0,1).
    double next_unit() { return unit_open(next_u32()); }

private:
    std::uint64_t seed_;
    std::uint64_t hi_;
    std::uint64_t pos_ = 0;
    std::uint64_t cached_block_ = ~std::uint64_t{0};
    std::array<std::uint32_t, 4> cache_{};
};

} // namespace slabperc
