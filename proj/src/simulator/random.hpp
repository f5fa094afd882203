// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PPOW_SIMULATOR_RANDOM_HPP
#define PPOW_SIMULATOR_RANDOM_HPP

#include <cmath>
#include <cstdint>

namespace ppow::sim::detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent seed for a named substream of a run.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64(seed ^ splitmix64(stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

inline double to_unit(std::uint64_t bits)
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

template <class Rng>
double uniform01(Rng& rng)
{
    return to_unit(rng());
}

template <class Rng>
double exponential(Rng& rng, double rate)
{
    return -std::log1p(-uniform01(rng)) / rate;
}

} // namespace ppow::sim::detail

#endif // PPOW_SIMULATOR_RANDOM_HPP
