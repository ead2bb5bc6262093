#pragma once

#include <cmath>
#include <cstdint>

namespace rotsim {

// splitmix64 finalizer. Used both as a stateless counter hash and to derive
// per-repetition seeds from a master seed, so that results do not depend on
// scheduling order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream));
}

// Counter-based Gaussian generator: sample i of a keyed stream is a pure
// function of (key, i). std::normal_distribution is not pinned across
// standard libraries, so Box-Muller is done by hand.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    // uniform on (0,1]
    double uniform(std::uint64_t counter) const {
        const std::uint64_t bits = mix64(key_ ^ mix64(counter));
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    double gaussian(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
};

} // namespace rotsim
