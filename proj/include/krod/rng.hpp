#pragma once

// Counter-based random streams.
//
// Generator: Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy
// as 1, 2, 3"). A stream is identified by a 64-bit key; the 128-bit counter
// holds {block index (64 bit), stream id (64 bit)}. Each block yields four
// 32-bit words. Standard normals use Box-Muller on two 53-bit uniforms built
// from one block, producing two normals per block. Stream version: "krod-rng/1".
//
// Child seeds are derived with SplitMix64 over (parent, FNV-1a(label), index).

#include "krod/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace krod {

inline constexpr std::string_view kRngVersion = "krod-rng/1 philox4x32-10 box-muller";

/// Philox4x32 with 10 rounds.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key   = std::array<std::uint32_t, 2>;

    static constexpr Block generate(Block counter, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
        }
        return counter;
    }

private:
    static constexpr std::uint32_t kMul0  = 0xD2511F53u;
    static constexpr std::uint32_t kMul1  = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Deterministic child seed for (stage label, index) under a parent seed.
inline constexpr Seed derive_seed(Seed parent, std::string_view label, std::uint64_t index = 0) noexcept
{
    return splitmix64(splitmix64(parent ^ fnv1a64(label)) + index);
}

/// Sequential view over a Philox stream: uniforms in (0, 1) and standard normals.
class RandomStream {
public:
    explicit RandomStream(Seed seed, std::uint64_t stream_id = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_id_(stream_id)
    {
    }

    /// Uniform double in the open interval (0, 1), 53 bits of resolution.
    double uniform() noexcept
    {
        if (word_ >= 4) refill();
        const std::uint64_t hi = block_[word_];
        const std::uint64_t lo = block_[word_ + 1];
        word_ += 2;
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r  = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_     = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    /// Fills a matrix column by column with i.i.d. N(0, 1) entries.
    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols)
    {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

private:
    void refill() noexcept
    {
        const Philox4x32::Block counter{static_cast<std::uint32_t>(block_index_),
                                        static_cast<std::uint32_t>(block_index_ >> 32),
                                        static_cast<std::uint32_t>(stream_id_),
                                        static_cast<std::uint32_t>(stream_id_ >> 32)};
        block_ = Philox4x32::generate(counter, key_);
        ++block_index_;
        word_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_id_;
    std::uint64_t block_index_ = 0;
    Philox4x32::Block block_{};
    int word_       = 4;
    double spare_   = 0.0;
    bool has_spare_ = false;
};

} // namespace krod
