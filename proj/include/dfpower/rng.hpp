#pragma once

#include <array>
#include <cstdint>

namespace dfpower {

// Counter-based random stream (Philox4x32-10). A stream is addressed by
// (seed, stream_id); distinct ids give statistically independent streams,
// which is what makes parallel replications order-independent and
// bit-reproducible. No global state anywhere.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on the open interval (0,1); safe for inverse-CDF transforms.
    double uniform01();

    // Standard normal draw via the inverse CDF.
    double normal();

    // Derive an unrelated stream from this one's identity. Used to give
    // nested stochastic routines (integration rules, calibration draws)
    // their own streams without perturbing the parent sequence.
    RandomStream substream(std::uint64_t sub) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;  // forces refill on first use
};

// SplitMix64 mixing; used for substream id derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace dfpower
