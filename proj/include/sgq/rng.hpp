#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sgq {

// All randomness in the pipeline flows from one root seed through labeled
// sub-streams, so independent stages can be regenerated in isolation and
// frame-level work can run in any order without changing the output.

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// Derives the seed of a named sub-stream from a root seed.
std::uint64_t sub_seed(std::uint64_t root, std::string_view label);

// One uniform draw in [0,1) keyed by (seed, key); used where a scorer or
// sampler must be a pure function of an id rather than of call order.
double hash_uniform(std::uint64_t seed, std::string_view key);

// Deterministic random stream. mt19937_64 is bit-specified by the standard;
// the uniform/normal mappings are written out here because the std::
// distributions are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0,1), 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller
    double normal();

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sgq
