#ifndef LEXICASE_RANDOM_HPP
#define LEXICASE_RANDOM_HPP

#include <array>
#include <cstdint>
#include <cstddef>
#include <limits>

namespace lexicase {

constexpr std::uint64_t GoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr auto splitmix64(std::uint64_t& state) noexcept -> std::uint64_t
{
    std::uint64_t z = (state += GoldenGamma);
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

/// Seeded xoshiro256** stream. Satisfies UniformRandomBitGenerator.
///
/// Streams for independent events are obtained with derive(k): the child seed
/// is `seed ^ (k * 0x9E3779B97F4A7C15)` passed once through splitmix64, and the
/// child state is then filled from splitmix64 of that seed. Event k therefore
/// sees the same numbers no matter which thread runs it or in what order.
class RandomSource {
public:
    using result_type = std::uint64_t;

    explicit RandomSource(std::uint64_t seed) noexcept
        : seed_(seed)
    {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            word = splitmix64(sm);
        }
    }

    static constexpr auto min() noexcept -> result_type { return 0; }
    static constexpr auto max() noexcept -> result_type { return std::numeric_limits<result_type>::max(); }

    auto operator()() noexcept -> result_type
    {
        auto const result = rotl(state_[1] * 5, 7) * 9;
        auto const t = state_[1] << 17U;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    [[nodiscard]] auto seed() const noexcept -> std::uint64_t { return seed_; }

    [[nodiscard]] auto derive(std::uint64_t event_index) const noexcept -> RandomSource
    {
        std::uint64_t mixed = seed_ ^ (event_index * GoldenGamma);
        return RandomSource(splitmix64(mixed));
    }

    // Uniform integer in [0, n). n must be positive.
    auto below(std::uint64_t n) noexcept -> std::uint64_t
    {
        // Lemire's multiply-shift with rejection; unbiased.
        __extension__ using Wide = unsigned __int128;
        auto x = (*this)();
        auto m = static_cast<Wide>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            auto const threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<Wide>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64U);
    }

    // Uniform real in [0, 1) with 53 random bits.
    auto uniform() noexcept -> double
    {
        return static_cast<double>((*this)() >> 11U) * 0x1.0p-53;
    }

    // Uniform real in [lo, hi).
    auto uniform(double lo, double hi) noexcept -> double { return lo + (hi - lo) * uniform(); }

    auto bernoulli(double p) noexcept -> bool { return uniform() < p; }

private:
    static constexpr auto rotl(std::uint64_t x, int k) noexcept -> std::uint64_t
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_ {};
};

} // namespace lexicase

#endif
