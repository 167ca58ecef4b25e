#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace mtd {

// splitmix64 finalizer, used to turn arbitrary 64-bit values into well-mixed seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// Named substream derivation: one master seed fans out into independent
// streams keyed by label (and optional index). Adding a new label never
// perturbs draws taken from the others.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return mix64(base ^ fnv1a64(label));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) {
    return mix64(derive_seed(base, label) ^ mix64(index ^ 0xa0761d6478bd642fULL));
}

// A seeded random stream with the handful of distributions the simulations
// need. Distribution code is written out so that a given (seed, call
// sequence) yields the same draws on every platform.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform in [0, 1).
    double real01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return real01() < p; }

    // Uniform over {0, ..., n-1}.
    int index(int n) {
        if (n <= 0) throw std::invalid_argument("RngStream::index: n must be positive");
        const auto un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return static_cast<int>(x % un);
    }

    // Exponential with the given mean.
    double exponential(double mean) { return -mean * std::log1p(-real01()); }

    // Box-Muller, one value per call.
    double normal(double mu, double sd) {
        const double u1 = 1.0 - real01();  // (0, 1]
        const double u2 = real01();
        return mu + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Rejection-sampled normal restricted to [lo, hi].
    double truncated_normal(double mu, double sd, double lo, double hi) {
        if (sd <= 0.0) return std::min(std::max(mu, lo), hi);
        for (int i = 0; i < 100000; ++i) {
            const double x = normal(mu, sd);
            if (x >= lo && x <= hi) return x;
        }
        return std::min(std::max(mu, lo), hi);
    }

    // Sample an index from a probability vector (entries nonnegative; mass ~1).
    int categorical(const std::vector<double>& probs) {
        if (probs.empty()) throw std::invalid_argument("RngStream::categorical: empty distribution");
        const double u = real01();
        double acc = 0.0;
        int last_positive = -1;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] > 0.0) last_positive = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last_positive >= 0 ? last_positive : static_cast<int>(probs.size()) - 1;
    }

    // k distinct indices from {0, ..., n-1}, partial Fisher-Yates.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + index(n - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace mtd
