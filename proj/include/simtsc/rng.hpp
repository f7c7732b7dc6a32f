#pragma once

// Seeded, portable pseudo-random generator used everywhere randomness is
// needed: splits, weight init, batch shuffling, negative sampling, dropout.
//
// The core is the splitmix64 step function (Steele, Lea, Flood 2014).
// Named sub-streams are derived from a base seed so that changing one
// consumer (say, dropout) never perturbs another (say, batch shuffling).
// Bounded draws use rejection sampling and shuffles are plain Fisher-Yates,
// so any implementation of this scheme in any language reproduces the same
// sequences bit for bit.

#include <cstdint>
#include <vector>

namespace simtsc {

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), unbiased via rejection.
    uint64_t next_below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// Stream ids for deriving independent generators from one experiment seed.
enum class RngStream : uint64_t {
    split = 0x53504c4954ULL,      // dataset splitting
    init = 0x494e4954ULL,         // weight initialization
    shuffle = 0x53485546ULL,      // per-epoch batch shuffling
    negative = 0x4e454753ULL,     // negative-pool sampling
    dropout = 0x44524f50ULL,      // dropout masks
    predict = 0x50524544ULL,      // test-time partner sampling
    train_eval = 0x54455641ULL,   // training-accuracy partner sampling
};

inline Rng derive_rng(uint64_t seed, RngStream stream) {
    // One mixing round keeps the derived streams decorrelated even for
    // adjacent seeds.
    Rng mixer(seed ^ (static_cast<uint64_t>(stream) * 0xd1342543de82ef95ULL));
    return Rng(mixer.next_u64());
}

}  // namespace simtsc
