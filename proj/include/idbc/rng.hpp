#pragma once

// Counter-mode keyed pseudo-random streams. Every random object in this
// library is derived from a root seed plus a list of 64-bit words naming the
// object (stream tag, grid index, message index, pool index, ...), so any
// value can be re-derived on demand without materializing anything and runs
// are reproducible regardless of evaluation order or thread count.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace idbc {

inline constexpr std::uint64_t k_golden = 0x9e3779b97f4a7c15ULL;

// Finalizer from splitmix64; full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27; z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t key_combine(std::uint64_t h, std::uint64_t w) {
    return mix64(h + k_golden + (w ^ (h << 6) ^ (h >> 2)));
}

inline std::uint64_t derive_key(std::uint64_t root,
                                std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = mix64(root ^ 0x5bf0'3635'dcd1'd069ULL);
    for (std::uint64_t w : words) h = key_combine(h, w);
    return h;
}

// Stream tags keeping derivation paths disjoint across object kinds. Shared
// between the single-user, broadcast, and extended builders on purpose: a code
// with collapsed message axes must reproduce the smaller code bit for bit.
enum class StreamTag : std::uint64_t {
    pool = 1,        // (pool, v) -> input word v
    bin = 2,         // (bin, side, common_m, m) -> index-set membership stream
    vsel = 3,        // (vsel, common_m, m_y, m_z) -> chosen pool index
    phi = 4,         // (phi, m) + y-word hashing -> feedback key map
    trial = 5,       // (trial, grid, seed, m, t) -> Monte Carlo streams
    tcode = 6,       // transmission codebook
    misc = 7,
};

class Crng {
  public:
    Crng() : key_(0) {}
    explicit Crng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix64(key_ + (++ctr_) * k_golden); }

    // 53-bit mantissa uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Unbiased integer in [0, bound) by multiply-shift with rejection.
    std::uint64_t uniform_u64(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_u64: bound 0");
        while (true) {
            const std::uint64_t x = next_u64();
            const unsigned __int128 m =
                static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(bound);
            const std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= bound || lo >= static_cast<std::uint64_t>(-static_cast<std::int64_t>(bound)) % bound)
                return static_cast<std::uint64_t>(m >> 64);
        }
    }

    std::uint32_t uniform_u32(std::uint32_t bound) {
        return static_cast<std::uint32_t>(uniform_u64(bound));
    }

    // Inverse-CDF draw from a cumulative row (last entry ~ 1).
    int sample_cdf(const std::vector<double>& cdf) {
        const double u = next_double();
        int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (u < cdf[static_cast<std::size_t>(mid)]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

    // Exact Poisson by Knuth inversion for small means, sum of independent
    // small-mean chunks otherwise (a sum of Poissons is Poisson).
    std::int64_t poisson(double lambda) {
        if (lambda < 0.0 || !std::isfinite(lambda))
            throw std::invalid_argument("poisson: bad mean");
        std::int64_t total = 0;
        while (lambda > 16.0) {
            total += poisson_small(16.0);
            lambda -= 16.0;
        }
        return total + poisson_small(lambda);
    }

  private:
    std::int64_t poisson_small(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        std::int64_t k = 0;
        double prod = next_double();
        while (prod > limit) {
            ++k;
            prod *= next_double();
        }
        return k;
    }

    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

inline Crng make_stream(std::uint64_t root, StreamTag tag,
                        std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = derive_key(root, {static_cast<std::uint64_t>(tag)});
    for (std::uint64_t w : words) h = key_combine(h, w);
    return Crng(h);
}

}  // namespace idbc
