#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace dcabc {

// Keyed random stream. The key is derived from (master_seed, stream path) with
// SplitMix64 finalisers; draws come from xoshiro256** seeded from that key.
// Identical keys give identical streams, so work can be split across threads
// by handing each task its own derived source.
class RandomSource {
public:
    using result_type = std::uint64_t;

    RandomSource(std::uint64_t master_seed, std::uint64_t stream_id);

    // Child stream keyed on this stream's key plus the given path.
    RandomSource derive(std::initializer_list<std::uint64_t> path) const;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    // Uniform on the open interval (0, 1).
    double uniform();
    double normal();

    std::uint64_t key() const noexcept { return key_; }

private:
    explicit RandomSource(std::uint64_t key);
    void seed_state();

    std::uint64_t key_;
    std::uint64_t s_[4];
};

// Stream tags used by the samplers so every random decision has a fixed key.
namespace streams {
inline constexpr std::uint64_t proposal = 1;
inline constexpr std::uint64_t clone = 2;
inline constexpr std::uint64_t rebalance = 3;
inline constexpr std::uint64_t initial = 4;
inline constexpr std::uint64_t pilot = 5;
inline constexpr std::uint64_t bootstrap = 6;
inline constexpr std::uint64_t dataset = 7;
}  // namespace streams

}  // namespace dcabc
