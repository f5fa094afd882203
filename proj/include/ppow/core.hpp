// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PPOW_CORE_HPP
#define PPOW_CORE_HPP

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ppow {

using Seconds = double;
using MinerId = std::uint32_t;
using Uint256 = boost::multiprecision::uint256_t;

/**
 * Opaque 256-bit identifier of a header (block or partial PoW).
 * words[0] holds the most significant 64 bits.
 */
struct Digest {
    std::array<std::uint64_t, 4> words{};

    static Digest zero() { return {}; }
    static Digest from_uint256(const Uint256& value);
    /** Parse 64 hex characters (most significant first). Throws on malformed input. */
    static Digest from_hex(const std::string& hex);

    Uint256 to_uint256() const;
    std::string hex() const;
    bool is_zero() const { return words == std::array<std::uint64_t, 4>{}; }

    Digest& operator^=(const Digest& other)
    {
        for (std::size_t i = 0; i < words.size(); ++i) words[i] ^= other.words[i];
        return *this;
    }
    friend Digest operator^(Digest lhs, const Digest& rhs) { return lhs ^= rhs; }
    friend bool operator==(const Digest&, const Digest&) = default;
    friend std::strong_ordering operator<=>(const Digest&, const Digest&) = default;
};

struct DigestHasher {
    std::size_t operator()(const Digest& d) const noexcept
    {
        // ids are uniformly random already; fold rather than rehash
        return static_cast<std::size_t>(d.words[0] ^ (d.words[1] * 0x9e3779b97f4a7c15ULL) ^ d.words[2] ^ d.words[3]);
    }
};

enum class AdjusterMode { Fixed, Variable };

/** Protocol constants shared by every honest miner. */
struct ProtocolParams {
    Seconds T = 600.0;        ///< average block interval
    std::uint32_t n = 50;     ///< difficulty adjuster
    Seconds delta_b = 10.0;   ///< upper bound of block propagation time
    Seconds delta_p = 10.0;   ///< upper bound of partial-PoW propagation time
    double D = 0.0;           ///< upper bound of absolute clock drift
    AdjusterMode mode = AdjusterMode::Fixed;

    /** Throws std::invalid_argument naming the first violated constraint. */
    void validate() const;
};

/** Durations a miner measures on its own clock. */
struct DerivedDelays {
    Seconds acceptance_window = 0.0;
    Seconds sufficiently_shared_delay = 0.0;
    Seconds inclusion_delay = 0.0;
};

DerivedDelays derive_delays(const ProtocolParams& params);

struct PartialPoW {
    Digest id;
    MinerId producer = 0;
    Seconds creation_time = 0.0;
    std::uint32_t adjuster = 1;
    bool is_block = false;
};

struct Block {
    Digest id;
    Digest parent;
    std::uint64_t height = 0;
    MinerId producer = 0;
    Seconds creation_time = 0.0;
    std::vector<Digest> shared_set; ///< sorted, duplicate free
    Digest commitment;

    bool is_genesis() const { return height == 0; }
};

Block make_genesis();

struct PoWRecord {
    PartialPoW pow;
    Seconds arrival_time = 0.0;
    bool valid = true;
};

/** A parent-linked path of blocks ending at its head. Blocks are borrowed. */
struct Chain {
    std::vector<const Block*> blocks;
    Seconds arrival_time = 0.0;

    const Block& head() const { return *blocks.back(); }
    std::uint64_t height() const { return blocks.empty() ? 0 : head().height; }
};

enum class HeaderClass { FullBlock, PartialOnly, Neither };

/** Full-block iff hash < target, partial iff hash < n*target (saturating at 2^256-1). */
HeaderClass classify_header(const Uint256& hash_value, const Uint256& target, std::uint32_t n);

Digest compute_commitment(std::span<const Digest> ids);
bool verify_commitment(const Block& block);

/** Maps the two most significant timestamp bits 00/01/10/11 to 50/100/150/200. */
std::uint32_t decode_difficulty_adjuster(std::uint32_t timestamp);
/** Inverse of decode_difficulty_adjuster: rewrites the top two bits of a timestamp. */
std::uint32_t encode_difficulty_adjuster(std::uint32_t timestamp, std::uint32_t adjuster);

} // namespace ppow

#endif // PPOW_CORE_HPP
