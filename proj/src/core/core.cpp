// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/core.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ppow {

Digest Digest::from_uint256(const Uint256& value)
{
    Digest d;
    Uint256 v = value;
    for (int i = 3; i >= 0; --i) {
        d.words[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(v & std::numeric_limits<std::uint64_t>::max());
        v >>= 64;
    }
    return d;
}

Digest Digest::from_hex(const std::string& hex)
{
    if (hex.size() != 64) throw std::invalid_argument("digest hex must be 64 characters, got " + std::to_string(hex.size()));
    Digest d;
    for (std::size_t w = 0; w < 4; ++w) {
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < 16; ++i) {
            const char c = hex[w * 16 + i];
            std::uint64_t nibble;
            if (c >= '0' && c <= '9') nibble = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') nibble = static_cast<std::uint64_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') nibble = static_cast<std::uint64_t>(c - 'A' + 10);
            else throw std::invalid_argument(std::string("invalid hex character '") + c + "' in digest");
            word = (word << 4) | nibble;
        }
        d.words[w] = word;
    }
    return d;
}

Uint256 Digest::to_uint256() const
{
    Uint256 v = 0;
    for (auto w : words) {
        v <<= 64;
        v |= w;
    }
    return v;
}

std::string Digest::hex() const
{
    std::string out(64, '0');
    char buf[17];
    for (std::size_t w = 0; w < 4; ++w) {
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(words[w]));
        out.replace(w * 16, 16, buf);
    }
    return out;
}

void ProtocolParams::validate() const
{
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("T must be positive and finite");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(delta_b >= 0.0) || !std::isfinite(delta_b)) throw std::invalid_argument("delta_b must be non-negative");
    if (!(delta_p >= 0.0) || !std::isfinite(delta_p)) throw std::invalid_argument("delta_p must be non-negative");
    if (!(D >= 0.0) || !(D < 1.0)) throw std::invalid_argument("D must lie in [0, 1)");
}

DerivedDelays derive_delays(const ProtocolParams& params)
{
    params.validate();
    const double up = 1.0 + params.D;
    const double down = 1.0 - params.D;
    DerivedDelays d;
    d.acceptance_window = params.delta_b * up;
    d.sufficiently_shared_delay = 2.0 * params.delta_b * up;
    // actual-time wait (delta_p + 2*delta_b*(1+D)/(1-D)), converted to a measured duration
    d.inclusion_delay = (params.delta_p + 2.0 * params.delta_b * up / down) * up;
    return d;
}

Block make_genesis()
{
    Block g;
    g.id = Digest::zero();
    g.parent = Digest::zero();
    g.height = 0;
    g.commitment = Digest::zero();
    return g;
}

HeaderClass classify_header(const Uint256& hash_value, const Uint256& target, std::uint32_t n)
{
    if (target == 0) throw std::invalid_argument("target must be positive");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (hash_value < target) return HeaderClass::FullBlock;

    const Uint256 max = std::numeric_limits<Uint256>::max();
    const Uint256 partial_target = (target > max / n) ? max : target * n;
    // at saturation every hash except 2^256-1 itself qualifies
    return hash_value < partial_target ? HeaderClass::PartialOnly : HeaderClass::Neither;
}

Digest compute_commitment(std::span<const Digest> ids)
{
    Digest acc;
    for (const auto& id : ids) acc ^= id;
    return acc;
}

bool verify_commitment(const Block& block)
{
    return compute_commitment(block.shared_set) == block.commitment;
}

std::uint32_t decode_difficulty_adjuster(std::uint32_t timestamp)
{
    return 50u * ((timestamp >> 30) + 1u);
}

std::uint32_t encode_difficulty_adjuster(std::uint32_t timestamp, std::uint32_t adjuster)
{
    if (adjuster % 50u != 0 || adjuster < 50u || adjuster > 200u)
        throw std::invalid_argument("adjuster must be one of 50, 100, 150, 200");
    const std::uint32_t code = adjuster / 50u - 1u;
    return (timestamp & 0x3fffffffu) | (code << 30);
}

} // namespace ppow
