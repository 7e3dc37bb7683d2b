#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace heavysum {

/// Philox4x32-10 counter-based generator.
///
/// The key is the experiment seed and the upper half of the counter is the
/// stream (replica) index, so every (seed, stream) pair addresses an
/// independent, reproducible sequence without any shared state.
class Philox {
public:
    using result_type = std::uint64_t;

    Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (index_ == 2) {
            refill();
        }
        return buffer_[index_++];
    }

    /// Skips `n` 64-bit outputs.
    void discard(std::uint64_t n) noexcept {
        while (n > 0) {
            if (index_ == 2) {
                if (n >= 2) {
                    ++block_;
                    n -= 2;
                    continue;
                }
                refill();
            }
            ++index_;
            --n;
        }
    }

    std::uint64_t seed() const noexcept {
        return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
    }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int index_ = 2;
};

/// Generator for replica `index` of an experiment seeded with `seed`.
inline Philox make_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return Philox(seed, index);
}

/// Uniform on the open interval (0, 1); never returns 0 or 1.
template <typename Engine>
inline double uniform_open(Engine& rng) noexcept {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

template <typename Engine>
inline double standard_exponential(Engine& rng) noexcept {
    return -std::log(uniform_open(rng));
}

/// Box-Muller, one normal per call (no cached second value).
template <typename Engine>
inline double standard_normal(Engine& rng) noexcept {
    const double u = uniform_open(rng);
    const double v = uniform_open(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
}

} // namespace heavysum
