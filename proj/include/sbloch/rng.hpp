#ifndef SBLOCH_RNG_HPP
#define SBLOCH_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include <sbloch/types.hpp>

namespace sbloch {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., Random123). The
 * output is a pure function of (key, counter), so any walker can draw its
 * noise for any step without touching shared state.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Standard-normal draws keyed by (seed, stream, step).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed)
      : m_key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    {
    }

    /// Four independent N(0,1) values for the given (stream, step) pair.
    std::array<double, 4> normals4(std::uint64_t stream, std::uint64_t step) const
    {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(stream),
            static_cast<std::uint32_t>(stream >> 32), static_cast<std::uint32_t>(step),
            static_cast<std::uint32_t>(step >> 32)};
        const auto r = Philox4x32::generate(ctr, m_key);
        std::array<double, 4> out;
        box_muller(r[0], r[1], out[0], out[1]);
        box_muller(r[2], r[3], out[2], out[3]);
        return out;
    }

    /// The white-noise vector ξ ~ N(0, 𝟙₃) shared by both copies of a walker.
    RVec3 xi(std::uint64_t walker, std::uint64_t step) const
    {
        const auto n = normals4(walker, step);
        return RVec3(n[0], n[1], n[2]);
    }

private:
    static void box_muller(std::uint32_t a, std::uint32_t b, double& z0, double& z1)
    {
        constexpr double two_m32 = 1.0 / 4294967296.0;
        const double u1 = (static_cast<double>(a) + 1.0) * two_m32; // (0, 1]
        const double u2 = static_cast<double>(b) * two_m32;         // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * pi * u2;
        z0 = r * std::cos(phi);
        z1 = r * std::sin(phi);
    }

    Philox4x32::Key m_key;
};

} // namespace sbloch

#endif
