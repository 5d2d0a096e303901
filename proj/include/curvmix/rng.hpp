#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace curvmix {

// Deterministic RNG with stable cross-platform output. All randomness in the
// project flows from one 64-bit seed through substreams derived here; nothing
// depends on implementation-defined std::random distributions.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        // splitmix64
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, n)
    uint64_t below(uint64_t n) {
        // rejection sampling to avoid modulo bias
        const uint64_t limit = n * (UINT64_MAX / n);
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % n;
    }

    // uniform double in [0,1) with 53 bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // substream keyed by a label; independent of draw order elsewhere
    Rng fork(const std::string& label) const {
        uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return Rng(state_ ^ h ^ 0xA5A5A5A5DEADBEEFull);
    }

  private:
    uint64_t state_;
};

// Samples an index from cumulative weights (strictly increasing, last = total).
inline int sample_cumulative(const std::vector<double>& cum, double u) {
    const double target = u * cum.back();
    int lo = 0, hi = static_cast<int>(cum.size()) - 1;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (cum[mid] > target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

}  // namespace curvmix
