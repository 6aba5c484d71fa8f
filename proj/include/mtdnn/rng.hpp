#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace mtdnn {

// Purpose tags for deriving independent streams from one root seed.
enum class RngStream : std::uint64_t {
    init = 1,
    dropout = 2,
    shuffle = 3,
    sampling = 4,
};

// splitmix64, a 64-bit counter-based generator. Every random draw in the
// library goes through this type, so equal seeds reproduce runs bit for bit
// regardless of platform. Distribution conversions are hand-rolled below
// because the <random> distributions are not pinned by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t state() const { return state_; }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Child generator for an unrelated purpose; does not advance this one.
    Rng split(std::uint64_t purpose) const {
        return Rng(mix(state_ ^ 0xA5A5A5A55A5A5A5Aull, purpose));
    }
    Rng split(RngStream s) const { return split(static_cast<std::uint64_t>(s)); }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Modulo bias is negligible at the sizes used here.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; two raw draws per value.
    double normal() {
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double stddev) { return stddev * normal(); }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 0x632BE59BD9B4E019ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

}  // namespace mtdnn
