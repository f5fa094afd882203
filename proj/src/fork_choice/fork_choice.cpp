// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/fork_choice.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace ppow::fork_choice {

namespace {

bool aged_beyond(const Digest& id, const LocalView& view, Seconds delay)
{
    if (view.store == nullptr) return false;
    const PoWRecord* rec = view.store->find(id);
    if (rec == nullptr || !rec->valid) return false;
    return view.now - rec->arrival_time > delay;
}

} // namespace

bool is_sufficiently_shared(const Digest& id, const LocalView& view)
{
    return aged_beyond(id, view, view.delays.sufficiently_shared_delay);
}

bool is_includable(const Digest& id, const LocalView& view)
{
    return aged_beyond(id, view, view.delays.inclusion_delay);
}

ChainWeight chain_weight(const Chain& chain, const LocalView& view)
{
    if (chain.blocks.empty()) throw std::invalid_argument("chain_weight: empty chain");

    std::set<Digest> shared;
    for (const Block* b : chain.blocks) shared.insert(b->shared_set.begin(), b->shared_set.end());

    double total = 0.0;
    for (const auto& id : shared) {
        const PoWRecord* rec = view.store ? view.store->find(id) : nullptr;
        if (view.check_sufficiency) {
            if (!is_sufficiently_shared(id, view)) return ChainWeight::poison();
        } else if (rec != nullptr && !rec->valid) {
            return ChainWeight::poison();
        }
        if (view.mode == AdjusterMode::Fixed) {
            total += 1.0;
        } else if (rec != nullptr) {
            // headers never seen carry no known adjuster and add nothing
            total += 1.0 / static_cast<double>(rec->pow.adjuster);
        }
    }
    return {total, false};
}

int compare(const ChainWeight& a, const ChainWeight& b)
{
    if (a.poisoned || b.poisoned) return (b.poisoned ? 1 : 0) - (a.poisoned ? 1 : 0);
    const double scale = std::max({1.0, std::abs(a.value), std::abs(b.value)});
    if (std::abs(a.value - b.value) <= 1e-12 * scale) return 0;
    return a.value < b.value ? -1 : 1;
}

std::vector<std::size_t> longest_chain(std::span<const Chain> chains)
{
    std::vector<std::size_t> out;
    std::uint64_t best = 0;
    for (std::size_t i = 0; i < chains.size(); ++i) {
        const auto h = chains[i].height();
        if (out.empty() || h > best) {
            out.assign(1, i);
            best = h;
        } else if (h == best) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> best_candidates(std::span<const Chain> chains, const LocalView& view,
                                         const BaseRule& base_rule)
{
    if (chains.empty()) throw std::invalid_argument("get_main_chain: no candidate chains");

    std::vector<std::size_t> tied = base_rule(chains);
    if (tied.empty()) throw std::logic_error("base fork-choice rule returned no candidates");
    std::sort(tied.begin(), tied.end());
    if (tied.size() == 1) return tied;

    Seconds earliest = std::numeric_limits<Seconds>::infinity();
    for (auto i : tied) earliest = std::min(earliest, chains[i].arrival_time);

    std::vector<std::size_t> kept;
    for (auto i : tied)
        if (chains[i].arrival_time - earliest <= view.delays.acceptance_window) kept.push_back(i);
    if (kept.size() == 1) return kept;

    std::vector<std::size_t> best;
    ChainWeight best_weight;
    for (auto i : kept) {
        const ChainWeight w = chain_weight(chains[i], view);
        const int order = best.empty() ? 1 : compare(w, best_weight);
        if (order > 0) {
            best.assign(1, i);
            best_weight = w;
        } else if (order == 0) {
            best.push_back(i);
        }
    }
    return best;
}

std::size_t get_main_chain(std::span<const Chain> chains, const LocalView& view, Rng& rng,
                           const BaseRule& base_rule)
{
    const auto best = best_candidates(chains, view, base_rule);
    if (best.size() == 1) return best.front();
    return best[uniform_index(rng, best.size())];
}

std::size_t uniform_index(Rng& rng, std::size_t count)
{
    if (count == 0) throw std::invalid_argument("uniform_index: empty range");
    __extension__ using u128 = unsigned __int128;
    const u128 wide = static_cast<u128>(rng()) * count;
    return static_cast<std::size_t>(wide >> 64);
}

} // namespace ppow::fork_choice
