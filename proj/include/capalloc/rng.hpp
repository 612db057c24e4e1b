#pragma once

// Deterministic random streams. All stochastic code in the library draws
// through Rng so that a run is reproducible from a single seed, independent
// of platform stdlib distribution internals.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace capalloc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Mix a base seed with a stream label so independent components of a run
// (env noise, probes, generator, ensemble members) get decorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
    return splitmix64(base ^ fnv1a64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index) {
    return splitmix64(derive_seed(base, stream) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

// xoshiro-free minimal generator: splitmix64 state walk. Passes through
// doubles with 53 bits of entropy per draw.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive. Debiased by rejection.
    long long uniform_int(long long lo, long long hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1ULL;
        if (span == 0) return static_cast<long long>(next_u64());  // full 64-bit range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return lo + static_cast<long long>(x % span);
    }

    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        return static_cast<std::size_t>(uniform_int(0, static_cast<long long>(n) - 1));
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
    // so the stream position is a pure function of the draw count.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

    // Marsaglia-Tsang; alpha < 1 handled by the alpha+1 boost.
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be positive");
        if (alpha < 1.0) {
            const double u = uniform();
            return gamma(alpha + 1.0) * std::pow(u > 0.0 ? u : 1e-300, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::vector<double> dirichlet(double alpha, std::size_t k) {
        std::vector<double> w(k);
        double sum = 0.0;
        for (auto& x : w) {
            x = gamma(alpha);
            sum += x;
        }
        if (sum <= 0.0) {
            for (auto& x : w) x = 1.0 / static_cast<double>(k);
        } else {
            for (auto& x : w) x /= sum;
        }
        return w;
    }

    // Index drawn proportionally to nonnegative weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w)) throw std::domain_error("categorical: weights must be finite and nonnegative");
            total += w;
        }
        if (total <= 0.0) throw std::domain_error("categorical: all weights zero");
        double r = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return i;
        }
        return weights.size() - 1;
    }

    // Sample m distinct indices from [0, n) without replacement.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
        if (m > n) throw std::invalid_argument("sample_without_replacement: m > n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        return pool;
    }

  private:
    std::uint64_t state_;
};

}  // namespace capalloc
