#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace patlim {

// Philox4x32-10 counter-based generator.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter c, Key k) {
        for (int r = 0; r < 10; ++r) {
            if (r) {
                k[0] += 0x9E3779B9u;
                k[1] += 0xBB67AE85u;
            }
            c = round(c, k);
        }
        return c;
    }

    static Key key_from_seed(std::uint64_t seed) {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

private:
    static Counter round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Uniform in (0, 1) from 64 bits, never exactly 0 or 1.
inline double u01_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Variates keyed by (seed; replicate, value id, time step, lane).
class KeyedStream {
public:
    explicit KeyedStream(std::uint64_t seed) : key_(Philox4x32::key_from_seed(seed)) {}

    Philox4x32::Counter bits(std::uint32_t rep, std::uint32_t value, std::uint32_t step, std::uint32_t lane = 0) const {
        return Philox4x32::apply({rep, value, step, lane}, key_);
    }

    double normal(std::uint32_t rep, std::uint32_t value, std::uint32_t step) const {
        auto b = bits(rep, value, step);
        const double u1 = u01_open(b[0], b[1]);
        const double u2 = u01_open(b[2], b[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
    }

    double uniform(std::uint32_t rep, std::uint32_t value, std::uint32_t step) const {
        auto b = bits(rep, value, step);
        return u01_open(b[0], b[1]);
    }

private:
    Philox4x32::Key key_;
};

}  // namespace patlim
