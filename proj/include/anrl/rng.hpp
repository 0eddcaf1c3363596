#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace anrl {

// Deterministic RNG. mt19937_64 has a standard-mandated sequence, and the
// float transforms below are spelled out explicitly so that streams are
// bit-identical across standard libraries (std::normal_distribution is not).
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Marsaglia polar method; consumes a variable number of draws but is
    // fully determined by the underlying stream.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    // Student-t with `dof` degrees of freedom (ratio of a normal to a scaled
    // chi). dof=2 gives the heavy-tailed draws used for outlier injection.
    double student_t(int dof) {
        double z = normal();
        double chi2 = 0.0;
        for (int i = 0; i < dof; ++i) {
            double n = normal();
            chi2 += n * n;
        }
        return z / std::sqrt(chi2 / static_cast<double>(dof));
    }

    // Integer in [0, n).
    uint64_t below(uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stable 64-bit string hash (FNV-1a). Used to derive per-site RNG streams.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace anrl
