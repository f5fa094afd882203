// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/core.hpp>

#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

using namespace ppow;

namespace {

Digest random_digest(std::mt19937_64& rng)
{
    Digest d;
    for (auto& w : d.words) w = rng();
    return d;
}

ProtocolParams with(double delta_b, double delta_p, double D)
{
    ProtocolParams p;
    p.delta_b = delta_b;
    p.delta_p = delta_p;
    p.D = D;
    return p;
}

} // namespace

TEST_SUITE("core")
{
TEST_CASE("derive_delays matches the worked examples")
{
    auto d = derive_delays(with(10, 10, 0));
    CHECK(d.acceptance_window == 10.0);
    CHECK(d.sufficiently_shared_delay == 20.0);
    CHECK(d.inclusion_delay == 30.0);

    d = derive_delays(with(0, 0, 0.5));
    CHECK(d.acceptance_window == 0.0);
    CHECK(d.sufficiently_shared_delay == 0.0);
    CHECK(d.inclusion_delay == 0.0);

    d = derive_delays(with(10, 10, 0.1));
    CHECK(d.acceptance_window == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(d.sufficiently_shared_delay == doctest::Approx(22.0).epsilon(1e-12));
    // (10 + 20*1.1/0.9)*1.1, evaluated by hand
    CHECK(std::abs(d.inclusion_delay - 37.888889) < 1e-4);
}

TEST_CASE("derive_delays is monotone in every input")
{
    const double grid[] = {0, 1, 5, 10, 20, 60};
    const double drifts[] = {0, 0.01, 0.1, 0.3, 0.9};
    for (double b : grid)
        for (double p : grid)
            for (std::size_t k = 0; k + 1 < std::size(drifts); ++k) {
                const auto lo = derive_delays(with(b, p, drifts[k]));
                const auto hi = derive_delays(with(b, p, drifts[k + 1]));
                CHECK(lo.acceptance_window <= hi.acceptance_window);
                CHECK(lo.sufficiently_shared_delay <= hi.sufficiently_shared_delay);
                CHECK(lo.inclusion_delay <= hi.inclusion_delay);
            }
    for (double D : drifts)
        for (std::size_t k = 0; k + 1 < std::size(grid); ++k) {
            const auto b0 = derive_delays(with(grid[k], 10, D));
            const auto b1 = derive_delays(with(grid[k + 1], 10, D));
            CHECK(b0.inclusion_delay <= b1.inclusion_delay);
            CHECK(b0.acceptance_window <= b1.acceptance_window);
            const auto p0 = derive_delays(with(10, grid[k], D));
            const auto p1 = derive_delays(with(10, grid[k + 1], D));
            CHECK(p0.inclusion_delay <= p1.inclusion_delay);
        }
}

TEST_CASE("inclusion never precedes sufficient sharing")
{
    for (int i = 0; i < 100; ++i) {
        const double D = i / 100.0;
        const auto d = derive_delays(with(10, 0, D));
        CHECK(d.inclusion_delay >= d.sufficiently_shared_delay);
    }
}

TEST_CASE("protocol parameters are validated")
{
    ProtocolParams p;
    p.T = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.n = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.delta_b = -1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.D = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_NOTHROW(ProtocolParams{}.validate());
}

TEST_CASE("classify_header examples and boundaries")
{
    CHECK(classify_header(5, 10, 50) == HeaderClass::FullBlock);
    CHECK(classify_header(10, 10, 1) == HeaderClass::Neither);
    CHECK(classify_header(499, 10, 50) == HeaderClass::PartialOnly);
    CHECK(classify_header(9, 10, 50) == HeaderClass::FullBlock);
    CHECK(classify_header(10, 10, 50) == HeaderClass::PartialOnly);
    CHECK(classify_header(500, 10, 50) == HeaderClass::Neither);
    CHECK_THROWS_AS(classify_header(1, 0, 50), std::invalid_argument);

    // n*target beyond 2^256-1 saturates instead of wrapping
    const Uint256 max = std::numeric_limits<Uint256>::max();
    const Uint256 big = max / 2;
    CHECK(classify_header(max - 1, big, 4) == HeaderClass::PartialOnly);
    CHECK(classify_header(max, big, 4) == HeaderClass::Neither);
}

TEST_CASE("classify_header splits the hash line into three contiguous ranges")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Uint256 target = 1 + rng() % 1000;
        const auto n = static_cast<std::uint32_t>(1 + rng() % 60);
        int phase = 0; // 0 full, 1 partial, 2 neither; must never go back
        for (Uint256 h = 0; h < target * n + 5; ++h) {
            const auto c = classify_header(h, target, n);
            const int now = c == HeaderClass::FullBlock ? 0 : c == HeaderClass::PartialOnly ? 1 : 2;
            REQUIRE(now >= phase);
            phase = now;
            // the partial-PoW range contains the full-block range
            CHECK((h < target * n) == (c != HeaderClass::Neither));
        }
    }
}

TEST_CASE("commitment examples")
{
    CHECK(compute_commitment({}).is_zero());
    std::mt19937_64 rng(3);
    const Digest a = random_digest(rng);
    const Digest b = random_digest(rng);
    const std::vector<Digest> one{a};
    CHECK(compute_commitment(one) == a);
    const std::vector<Digest> ab{a, b};
    const std::vector<Digest> ba{b, a};
    CHECK(compute_commitment(ab) == compute_commitment(ba));

    Block blk;
    CHECK(verify_commitment(blk));
    blk.shared_set = ab;
    std::sort(blk.shared_set.begin(), blk.shared_set.end());
    blk.commitment = a ^ b;
    CHECK(verify_commitment(blk));
    blk.commitment = a;
    CHECK_FALSE(verify_commitment(blk));
}

TEST_CASE("commitment updates incrementally")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Digest> s;
        const auto size = rng() % 12;
        for (std::size_t i = 0; i < size; ++i) s.push_back(random_digest(rng));
        const Digest x = random_digest(rng);
        auto with_x = s;
        with_x.insert(with_x.begin() + static_cast<std::ptrdiff_t>(rng() % (s.size() + 1)), x);
        CHECK((compute_commitment(with_x) ^ x) == compute_commitment(s));
    }
}

TEST_CASE("digest hex round trip")
{
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        const Digest d = random_digest(rng);
        CHECK(Digest::from_hex(d.hex()) == d);
        CHECK(Digest::from_uint256(d.to_uint256()) == d);
    }
    CHECK_THROWS(Digest::from_hex("xyz"));
    CHECK_THROWS(Digest::from_hex(std::string(64, 'g')));
}

TEST_CASE("genesis is the all-zero digest at height zero")
{
    const Block g = make_genesis();
    CHECK(g.id.is_zero());
    CHECK(g.is_genesis());
    CHECK(g.shared_set.empty());
    CHECK(verify_commitment(g));
}

TEST_CASE("difficulty adjuster lives in the top two timestamp bits")
{
    CHECK(decode_difficulty_adjuster(0x00000000u) == 50);
    CHECK(decode_difficulty_adjuster(0x3fffffffu) == 50);
    CHECK(decode_difficulty_adjuster(0x40000000u) == 100);
    CHECK(decode_difficulty_adjuster(0x80000000u) == 150);
    CHECK(decode_difficulty_adjuster(0xc0000000u) == 200);
    CHECK(decode_difficulty_adjuster(0xc0001234u) == decode_difficulty_adjuster(0xfffffff0u));

    std::mt19937 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const std::uint32_t ts = rng();
        for (std::uint32_t adj : {50u, 100u, 150u, 200u}) {
            const auto enc = encode_difficulty_adjuster(ts, adj);
            CHECK(decode_difficulty_adjuster(enc) == adj);
            CHECK((enc & 0x3fffffffu) == (ts & 0x3fffffffu));
        }
    }
    CHECK_THROWS_AS(encode_difficulty_adjuster(0, 75), std::invalid_argument);
    CHECK_THROWS_AS(encode_difficulty_adjuster(0, 250), std::invalid_argument);
}
}
