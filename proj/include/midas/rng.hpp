#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace midas {

// Stateless mixer used to derive independent sub-stream seeds from a master
// seed. Every unit of work (trial, fold, restart, ...) gets its own engine
// seeded by splitmix64(master, index), so work can be reordered or
// parallelized without changing any draw.
inline uint64_t splitmix64(uint64_t state) {
    uint64_t z = state + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x1234567));
}

// mt19937_64 with hand-rolled distributions. The std:: distributions are
// implementation-defined, so using them would break cross-platform and
// cross-compiler reproducibility of generated datasets.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

    uint64_t bits() { return eng_(); }

    // uniform in [0, 1), 53-bit mantissa
    double random() { return (eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * random(); }

    // uniform integer in [lo, hi), rejection sampled so every value is
    // exactly equally likely
    int64_t integers(int64_t lo, int64_t hi) {
        if (hi <= lo) throw std::invalid_argument("integers: empty range");
        uint64_t span = static_cast<uint64_t>(hi - lo);
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return lo + static_cast<int64_t>(x % span);
    }

    // Box-Muller; the second deviate is deliberately discarded to keep the
    // draw count per call fixed
    double normal(double mu = 0.0, double sd = 1.0) {
        double u1 = 1.0 - random();
        double u2 = random();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mu + sd * z;
    }

    double exponential(double mean = 1.0) {
        return -mean * std::log(1.0 - random());
    }

    double lognormal(double mu = 0.0, double sigma = 1.0) {
        return std::exp(normal(mu, sigma));
    }

    // Marsaglia-Tsang squeeze; shape < 1 handled by the boost trick
    double gamma(double shape, double scale = 1.0) {
        if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("gamma: nonpositive parameter");
        if (shape < 1.0) {
            double u = random();
            return gamma(shape + 1.0, scale) * std::pow(u > 0.0 ? u : 5e-324, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = random();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(integers(0, static_cast<int64_t>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

    // k distinct indices from [0, n), order given by the partial shuffle
    std::vector<int> choice(int n, int k) {
        if (k > n) throw std::invalid_argument("choice: k > n");
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            int j = static_cast<int>(integers(i, n));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace midas
