#include "dcabc/random.hpp"

#include <boost/random/normal_distribution.hpp>

namespace dcabc {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t key, std::uint64_t value) {
    std::uint64_t x = key ^ (value * 0xd1342543de82ef95ULL);
    splitmix64(x);
    return splitmix64(x);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomSource::RandomSource(std::uint64_t master_seed, std::uint64_t stream_id)
    : key_(mix(mix(0x6a09e667f3bcc908ULL, master_seed), stream_id)) {
    seed_state();
}

RandomSource::RandomSource(std::uint64_t key) : key_(key) { seed_state(); }

void RandomSource::seed_state() {
    std::uint64_t x = key_;
    for (auto& s : s_) s = splitmix64(x);
}

RandomSource RandomSource::derive(std::initializer_list<std::uint64_t> path) const {
    std::uint64_t k = key_;
    for (auto p : path) k = mix(k, p);
    return RandomSource(k);
}

RandomSource::result_type RandomSource::operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RandomSource::uniform() {
    // 53 random bits, shifted by half an ulp so 0 is never returned.
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomSource::normal() {
    boost::random::normal_distribution<double> dist;
    return dist(*this);
}

}  // namespace dcabc
