#pragma once

#include <cstdint>
#include <vector>

namespace kathleen {

// Counter-based deterministic PRNG (splitmix64). The state advances by a
// fixed odd constant and each output is a bijective mix of the counter, so
// the stream for a given seed is identical on every platform. Floats are
// built from the top 53 bits, which IEEE-754 reproduces exactly.
class Prng {
public:
    explicit Prng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // [0,1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0,n)
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Derives an independent stream; used so e.g. shuffling and dropout
    // do not disturb each other's sequences.
    Prng fork(uint64_t stream_id) {
        Prng child(state_ ^ (0xD1B54A32D192ED03ull * (stream_id + 1)));
        child.next_u64();
        return child;
    }

    // Fisher-Yates; hand-rolled so the permutation is identical across
    // standard libraries (std::shuffle is not portable).
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace kathleen
