#pragma once

#include <array>
#include <cstdint>

namespace mlc {

// Philox4x32 with 10 rounds (Salmon et al. counter-based generator).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter c, Key k) noexcept {
        constexpr std::uint32_t m0 = 0xD2511F53u;
        constexpr std::uint32_t m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u;
        constexpr std::uint32_t w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{m0} * c[0];
            const std::uint64_t p1 = std::uint64_t{m1} * c[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += w0;
            k[1] += w1;
        }
        return c;
    }
};

// One independent stream of uniforms addressed by (seed, stream, block).
// Draw i of block b on stream s is a pure function of (seed, s, b, i).
class Substream {
  public:
    Substream(std::uint64_t seed, std::uint64_t stream, std::uint32_t block) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream),
          block_(block) {}

    std::uint64_t next_u64() noexcept {
        if (buffered_ == 0) refill();
        const unsigned idx = 2 - buffered_;
        --buffered_;
        return (std::uint64_t{out_[2 * idx]} << 32) | out_[2 * idx + 1];
    }

    // Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint32_t draws() const noexcept { return counter_; }

  private:
    void refill() noexcept {
        out_ = Philox4x32::apply({counter_, block_, static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)},
                                 key_);
        ++counter_;
        buffered_ = 2;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint32_t block_;
    std::uint32_t counter_ = 0;
    unsigned buffered_ = 0;
    Philox4x32::Counter out_{};
};

}  // namespace mlc
