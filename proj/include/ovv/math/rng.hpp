#pragma once

#include <cstdint>
#include <cmath>

namespace ovv {

// splitmix64, used to expand a 64-bit seed into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with explicitly seedable, independent streams. Stream k of a
// base seed is derived as splitmix64(seed ^ mix(k)), so parallel workers get
// reproducible draws no matter how work is scheduled.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed;
        sm ^= 0x2545f4914f6cdd1dULL * (stream + 1);
        sm += 0x9e3779b97f4a7c15ULL * stream;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0,1), never returning the endpoints.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal();       // inverse-CDF draw, see special.hpp for the quantile
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Knuth multiplication; only used for small means (jump counts per step).
    int poisson(double mean) {
        const double limit = std::exp(-mean);
        int count = -1;
        double prod = 1.0;
        do {
            ++count;
            prod *= uniform();
        } while (prod > limit);
        return count;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace ovv
