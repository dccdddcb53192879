#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace skfluct {

// splitmix64 finalizer; used to derive independent child streams from a
// master seed. child_seed(s, r) == child_seed(s, r') iff r == r'
// for all r, r' < 2^64 - 1 in practice.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream));
}

// Deterministic Gaussian stream: mt19937_64 (bit-exact per the C++ standard)
// driving a Box-Muller transform. The uniform draws are
// u = (x >> 11 + 0.5) * 2^-53 in (0,1), so log(u) is always finite.
// Same seed => same sequence on any conforming implementation.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    double next_uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
    }

    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace skfluct
