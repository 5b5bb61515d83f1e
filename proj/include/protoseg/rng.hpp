#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace protoseg {

// Seeded RNG with hand-rolled distributions. std::normal_distribution and
// std::shuffle are implementation-defined sequences; spelling them out keeps
// every seed-dependent artifact bit-reproducible.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the sine partner is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace protoseg
