// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PPOW_FORK_CHOICE_HPP
#define PPOW_FORK_CHOICE_HPP

#include <ppow/core.hpp>

#include <functional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

namespace ppow::fork_choice {

using Rng = std::mt19937_64;

/** Lookup of partial PoWs a miner has received. Returns nullptr for ids not (yet) arrived. */
class PowStore {
public:
    virtual ~PowStore() = default;
    virtual const PoWRecord* find(const Digest& id) const = 0;
};

class MapPowStore final : public PowStore {
public:
    void insert(const PoWRecord& record) { records_[record.pow.id] = record; }
    const PoWRecord* find(const Digest& id) const override
    {
        auto it = records_.find(id);
        return it == records_.end() ? nullptr : &it->second;
    }
    std::size_t size() const { return records_.size(); }

private:
    std::unordered_map<Digest, PoWRecord, DigestHasher> records_;
};

/** Snapshot of one miner's knowledge. `now` and all arrival times are on that miner's clock. */
struct LocalView {
    const PowStore* store = nullptr;
    Seconds now = 0.0;
    DerivedDelays delays;
    AdjusterMode mode = AdjusterMode::Fixed;
    /// When false the miner skips the sufficiently-shared test and only counts the union.
    bool check_sufficiency = true;
};

/** Weight of a chain; a poisoned chain loses to every non-poisoned one. */
struct ChainWeight {
    double value = 0.0;
    bool poisoned = false;

    static ChainWeight poison() { return {0.0, true}; }

    friend bool operator==(const ChainWeight&, const ChainWeight&) = default;
};

/**
 * Three-way comparison of weights: negative, zero or positive. Reciprocal
 * sums equal up to rounding (relative 1e-12) compare equal.
 */
int compare(const ChainWeight& a, const ChainWeight& b);

bool is_sufficiently_shared(const Digest& id, const LocalView& view);
bool is_includable(const Digest& id, const LocalView& view);

ChainWeight chain_weight(const Chain& chain, const LocalView& view);

/// Base rule: returns the indices of the candidates it cannot distinguish.
using BaseRule = std::function<std::vector<std::size_t>(std::span<const Chain>)>;

/** Indices of all chains of maximal height. */
std::vector<std::size_t> longest_chain(std::span<const Chain> chains);

/**
 * Deterministic part of main-chain selection: base rule, acceptance-window
 * filter around the earliest tied arrival, then the set of kept candidates
 * sharing the maximal weight. Returned indices are ascending.
 */
std::vector<std::size_t> best_candidates(std::span<const Chain> chains, const LocalView& view,
                                         const BaseRule& base_rule = longest_chain);

/**
 * Selects the main chain and returns its index in `chains`. Equal best
 * weights are broken uniformly at random with `rng`.
 */
std::size_t get_main_chain(std::span<const Chain> chains, const LocalView& view, Rng& rng,
                           const BaseRule& base_rule = longest_chain);

/** Uniform index in [0, count) consuming exactly one draw from rng. */
std::size_t uniform_index(Rng& rng, std::size_t count);

} // namespace ppow::fork_choice

#endif // PPOW_FORK_CHOICE_HPP
