#pragma once

#include <cstdint>

namespace thinfilm {

// Counter-based generator "sm64-column-v1".
//
// Every random decision is a pure function of (seed, i1, i2, k): the splitmix64
// finalizer is applied to a running hash of the zigzag-encoded column indices
// and the trial counter. Streams never need to be stored; any draw can be
// replayed independently, and distinct columns are decorrelated by the keyed
// mixing. The exact constants below are part of the serialization contract.

inline uint64_t sm64_fin(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline uint64_t zigzag64(int64_t v) {
    return (uint64_t(v) << 1) ^ uint64_t(v >> 63);
}

/// Keyed 64-bit hash of (seed, a, b, c).
inline uint64_t key_mix(uint64_t seed, int64_t a, int64_t b, int64_t c) {
    uint64_t h = sm64_fin(seed ^ 0x243f6a8885a308d3ULL);
    h = sm64_fin(h ^ zigzag64(a) * 0x9e3779b97f4a7c15ULL);
    h = sm64_fin(h ^ zigzag64(b) * 0xc2b2ae3d27d4eb4fULL);
    h = sm64_fin(h ^ zigzag64(c) * 0x165667b19e3779f9ULL);
    return h;
}

/// Uniform double in [0,1) with 53 random bits.
inline double uniform01(uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

/// Bernoulli(p) draw for deposition trial k over column (i1,i2).
inline bool column_bernoulli(uint64_t seed, int i1, int i2, int k, double p) {
    return uniform01(key_mix(seed, i1, i2, k)) < p;
}

constexpr const char* kRngName = "sm64-column-v1";

/// Small sequential PRNG for test/audit sampling built on the same mixer;
/// state advances by a fixed odd increment (splitmix64 stream).
class SplitMix {
  public:
    explicit SplitMix(uint64_t seed) : state_(seed) {}
    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return sm64_fin(state_);
    }
    double next_double() { return uniform01(next()); }
    // uniform integer in [0, n)
    uint64_t next_below(uint64_t n) { return n ? next() % n : 0; }
    int next_int(int lo, int hi) {  // inclusive bounds
        return lo + int(next_below(uint64_t(hi - lo + 1)));
    }

  private:
    uint64_t state_;
};

}  // namespace thinfilm
