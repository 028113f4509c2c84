#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>

namespace qedc {

// Philox4x32-10 counter-based generator. The 128-bit counter is split into a
// 64-bit block index (low words) and a 64-bit stream id (high words), so any
// (key, stream) pair names an independent sequence without shared state.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t key, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (index_ == 4) {
            refill();
        }
        return buffer_[index_++];
    }

    void discard(std::uint64_t n) noexcept {
        while (n > 0) {
            if (index_ == 4) {
                const std::uint64_t whole = n / 4;
                block_ += whole;
                n -= whole * 4;
                if (n == 0) {
                    break;
                }
                refill();
            }
            ++index_;
            --n;
        }
    }

    static constexpr Block bijection(Block ctr, Key key) noexcept {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    std::uint64_t stream() const noexcept { return stream_; }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void refill() noexcept {
        const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = bijection(ctr, key_);
        ++block_;
        index_ = 0;
    }

    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Block buffer_{};
    int index_ = 4;
};

// Roles a trajectory draws randomness for. Each role gets its own substream so
// execution plans that consume draws in different orders stay independent.
enum class StreamRole : std::uint32_t {
    Chain = 0,
    Source = 1,
    Detector = 2,
    CompositeDetector = 3,
};

inline std::uint64_t substream_id(std::uint64_t trajectory, StreamRole role) noexcept {
    return (trajectory << 2) | static_cast<std::uint64_t>(role);
}

// Random-stream handle passed explicitly to every sampling operation.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

    double uniform() { return std::generate_canonical<double, 53>(engine_); }

    double normal() { return normal_(engine_); }

    // Circularly symmetric complex Gaussian with E|z|^2 = 1 and E[z z] = 0.
    std::complex<double> circular_normal() {
        constexpr double kHalfSqrt2 = 0.70710678118654752440;
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {kHalfSqrt2 * re, kHalfSqrt2 * im};
    }

    std::int64_t poisson(double mean) {
        if (mean <= 0.0) {
            return 0;
        }
        std::poisson_distribution<std::int64_t> dist(mean);
        return dist(engine_);
    }

    Philox4x32& engine() noexcept { return engine_; }

private:
    Philox4x32 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qedc
