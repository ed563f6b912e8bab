#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "sr/nn/tensor.hpp"

namespace sr::nn {

// Counter-based generator: output i depends only on (key, i), so streams
// keyed by (seed, step, frame, ...) are reproducible and uncorrelated.
// Mixing is splitmix64; normals come from Box-Muller on the raw stream,
// keeping draws identical across platforms and thread counts.
class CounterRng {
public:
    explicit CounterRng(uint64_t key) : key_(key) {}

    static CounterRng keyed(std::initializer_list<uint64_t> parts) {
        uint64_t k = 0x9e3779b97f4a7c15ULL;
        for (uint64_t p : parts) k = mix64(k ^ mix64(p));
        return CounterRng(k);
    }

    uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++ctr_); }

    // uniform in (0, 1]
    real uniform() {
        return (static_cast<real>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    real normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        real u1 = uniform();
        real u2 = uniform();
        real r = std::sqrt(-2.0 * std::log(u1));
        real a = 2.0 * std::numbers::pi_v<real> * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_normal(Tensor& t) {
        for (size_t i = 0; i < t.size(); ++i) t[i] = normal();
    }

    void fill_uniform(Tensor& t, real lo, real hi) {
        for (size_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * uniform();
    }

    // uniform integer in [0, n)
    int below(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

private:
    static uint64_t mix64(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    uint64_t key_ = 0;
    uint64_t ctr_ = 0;
    bool have_spare_ = false;
    real spare_ = 0.0;
};

} // namespace sr::nn
