// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/fork_choice.hpp>
#include <ppow/simulator.hpp>

#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <unordered_map>

namespace ppow::sim {

namespace {

using PowIdx = std::uint32_t;
using BlockIdx = std::uint32_t;
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
constexpr Seconds kNever = std::numeric_limits<Seconds>::infinity();

struct PowState {
    PartialPoW pow;
    Seconds publish_time = kNever;
    std::vector<Seconds> arrival; ///< global time per miner, kNever until known; emptied once finalized
    std::vector<BlockIdx> containing;
    bool finalized = false;
};

struct BlockState {
    Block block;
    BlockIdx parent = kNone;
    PowIdx header = kNone;
    std::vector<PowIdx> set;
    Seconds publish_time = kNever;
    std::vector<Seconds> due;     ///< scheduled delivery per miner
    std::vector<Seconds> arrival; ///< processed delivery per miner, kNever if unknown
};

struct MinerState {
    MinerSpec spec;
    std::uint32_t adjuster = 1;
    fork_choice::Rng rng;
    bool adversarial = false;

    std::uint64_t max_height = 0;
    std::vector<BlockIdx> tips;
    BlockIdx target = 0;
    std::unordered_map<BlockIdx, std::vector<BlockIdx>> waiting; ///< parent -> children that arrived first

    std::vector<BlockIdx> cached_best;
    BlockIdx cached_choice = kNone;

    Seconds local(Seconds global) const { return global * (1.0 + spec.drift); }
};

enum class EventKind : std::uint8_t { PowGenerated, MessageArrival, UnresponsiveTimeout, WindowExpiry, PowRelease };

struct Event {
    Seconds due = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::PowGenerated;
    MinerId miner = 0;
    std::uint64_t payload = 0;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const
    {
        if (a.due != b.due) return a.due > b.due;
        return a.seq > b.seq;
    }
};

struct PendingTie {
    TieKind kind = TieKind::Post;
    BlockIdx attacker_block = kNone;
    BlockIdx honest_block = kNone;
    Seconds created = 0.0;
};

struct AttackerState {
    MinerId id = 0;
    BlockIdx head = 0;
    std::vector<BlockIdx> unpublished; ///< ascending height
    std::uint64_t public_height = 0;
    bool in_tie = false;
    bool unresponsive = false;
    BlockIdx ignored = kNone;
    std::uint64_t timeout_token = 0;
};

class Engine {
public:
    explicit Engine(const SimConfig& cfg);
    SimMetrics run();

private:
    class MinerPowStore;

    // event plumbing
    void schedule(Seconds due, EventKind kind, MinerId miner, std::uint64_t payload);
    void log(MinerId miner, const char* kind, std::initializer_list<Digest> ids) const;
    Digest fresh_digest();

    // generation
    void on_generation();
    PowIdx new_pow(MinerId producer, bool is_block);
    BlockIdx new_block(MinerId producer, BlockIdx parent, PowIdx header);
    std::vector<PowIdx> build_shared_set(MinerId m, BlockIdx parent) const;

    // propagation
    void publish_pow(PowIdx p, MinerId from);
    void publish_block(BlockIdx b, MinerId from);
    void deliver(BlockIdx b, MinerId to);
    void accept_block(BlockIdx b, MinerId to);

    // honest behaviour
    void reselect(MinerId m);

    // attacker behaviour
    void attacker_found_block(BlockIdx b);
    void attacker_saw_block(BlockIdx b);
    void attacker_publish_through(std::uint64_t height);
    void attacker_adopt(BlockIdx b);
    void on_timeout(std::uint64_t token);
    void on_release(BlockIdx b);
    void open_tie(TieKind kind, BlockIdx attacker_block, BlockIdx honest_block);
    void measure_tie(std::size_t index);

    // chain helpers
    bool is_ancestor_or_equal(BlockIdx ancestor, BlockIdx b) const;
    BlockIdx ancestor_at(BlockIdx b, std::uint64_t height) const;
    BlockIdx lca(BlockIdx a, BlockIdx b) const;
    bool in_chain(PowIdx p, BlockIdx head) const;
    void update_finality();
    bool done() const;

    const SimConfig& cfg_;
    DerivedDelays delays_;
    std::vector<MinerState> miners_;
    std::optional<AttackerState> attacker_;
    std::vector<double> generation_weights_; ///< cumulative hashrate * adjuster

    std::vector<PowState> pows_;
    std::vector<BlockState> blocks_;
    std::unordered_map<Digest, PowIdx, DigestHasher> pow_index_;
    std::vector<PowIdx> pool_; ///< partial PoWs not yet in a finalized block

    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::uint64_t seq_ = 0;
    Seconds now_ = 0.0;
    std::mt19937_64 gen_rng_;
    std::mt19937_64 id_rng_;

    std::vector<PendingTie> pending_ties_;
    std::uint64_t post_measured_ = 0;
    std::uint64_t pre_measured_ = 0;

    BlockIdx finalized_ = 0;
    std::vector<std::uint64_t> generated_at_height_;

    double tw_block_sum_ = 0.0;
    std::uint64_t tw_block_count_ = 0;
    double tw_pow_sum_ = 0.0;
    std::uint64_t tw_pow_count_ = 0;

    SimMetrics metrics_;
};

/// The partial PoWs miner `m` has received by `now`, on its own clock.
class Engine::MinerPowStore final : public fork_choice::PowStore {
public:
    MinerPowStore(const Engine& engine, MinerId m) : engine_(engine), miner_(engine.miners_[m]), m_(m) {}

    // the returned pointer is valid until the next call
    const PoWRecord* find(const Digest& id) const override
    {
        auto it = engine_.pow_index_.find(id);
        if (it == engine_.pow_index_.end()) return nullptr;
        const PowState& p = engine_.pows_[it->second];
        if (p.finalized) {
            scratch_ = {p.pow, -kNever, true};
            return &scratch_;
        }
        const Seconds at = p.arrival[m_];
        if (at > engine_.now_) return nullptr;
        scratch_ = {p.pow, miner_.local(at), true};
        return &scratch_;
    }

private:
    const Engine& engine_;
    const MinerState& miner_;
    MinerId m_;
    mutable PoWRecord scratch_;
};

Engine::Engine(const SimConfig& cfg)
    : cfg_(cfg),
      delays_(derive_delays(cfg.params)),
      gen_rng_(detail::substream(cfg.seed, 1)),
      id_rng_(detail::substream(cfg.seed, 2))
{
    const std::size_t n = cfg.miners.size();
    const auto attacker = cfg.attacker();
    double cumulative = 0.0;
    for (const auto& spec : cfg.miners) {
        MinerState m;
        m.spec = spec;
        m.adjuster = spec.adjuster != 0 ? spec.adjuster : cfg.params.n;
        m.rng.seed(detail::substream(cfg.seed, 1000 + spec.id));
        m.adversarial = attacker && *attacker == spec.id && cfg.strategy != Strategy::HonestOnly;
        m.tips = {0};
        miners_.push_back(std::move(m));
        cumulative += spec.hashrate_fraction * static_cast<double>(miners_.back().adjuster);
        generation_weights_.push_back(cumulative);
    }
    if (attacker && cfg.strategy != Strategy::HonestOnly) {
        attacker_.emplace();
        attacker_->id = *attacker;
    }

    BlockState genesis;
    genesis.block = make_genesis();
    genesis.due.assign(n, 0.0);
    genesis.arrival.assign(n, 0.0);
    genesis.publish_time = 0.0;
    blocks_.push_back(std::move(genesis));
    generated_at_height_.push_back(0);

    metrics_.blocks_per_miner.assign(n, 0);
}

void Engine::schedule(Seconds due, EventKind kind, MinerId miner, std::uint64_t payload)
{
    if (due < now_ || !std::isfinite(due)) {
        ++metrics_.causality_violations;
        due = now_;
    }
    queue_.push(Event{due, seq_++, kind, miner, payload});
}

void Engine::log(MinerId miner, const char* kind, std::initializer_list<Digest> ids) const
{
    if (cfg_.event_log == nullptr) return;
    char head[64];
    std::snprintf(head, sizeof(head), "%.6f\t%u\t", now_, static_cast<unsigned>(miner));
    std::ostream& out = *cfg_.event_log;
    out << head << kind << '\t';
    bool first = true;
    for (const auto& id : ids) {
        if (!first) out << ',';
        out << id.hex();
        first = false;
    }
    out << '\n';
}

Digest Engine::fresh_digest()
{
    Digest d;
    for (auto& w : d.words) w = id_rng_();
    return d;
}

SimMetrics Engine::run()
{
    const double total_rate = generation_weights_.back() / cfg_.params.T;
    schedule(detail::exponential(gen_rng_, total_rate), EventKind::PowGenerated, 0, 0);

    while (!queue_.empty() && !done()) {
        const Event ev = queue_.top();
        if (ev.due > cfg_.stop.max_time) break;
        queue_.pop();
        now_ = ev.due;
        ++metrics_.events_processed;
        switch (ev.kind) {
        case EventKind::PowGenerated:
            on_generation();
            schedule(now_ + detail::exponential(gen_rng_, total_rate), EventKind::PowGenerated, 0, 0);
            break;
        case EventKind::MessageArrival:
            deliver(static_cast<BlockIdx>(ev.payload), ev.miner);
            update_finality();
            break;
        case EventKind::UnresponsiveTimeout:
            on_timeout(ev.payload);
            update_finality();
            break;
        case EventKind::WindowExpiry:
            measure_tie(static_cast<std::size_t>(ev.payload));
            break;
        case EventKind::PowRelease:
            on_release(static_cast<BlockIdx>(ev.payload));
            break;
        }
    }

    metrics_.simulated_time = now_;
    if (!metrics_.ties.empty()) {
        const auto g = measure_gamma(metrics_.ties);
        metrics_.ties_post = g.post;
        metrics_.ties_pre = g.pre;
    }
    if (metrics_.main_chain_blocks > 0)
        metrics_.relative_revenue = static_cast<double>(metrics_.attacker_blocks) / static_cast<double>(metrics_.main_chain_blocks);
    const std::uint64_t final_height = blocks_[finalized_].block.height;
    std::uint64_t generated = 0;
    for (std::uint64_t h = 1; h <= final_height && h < generated_at_height_.size(); ++h) generated += generated_at_height_[h];
    if (generated > 0)
        metrics_.stale_rate = static_cast<double>(generated - final_height) / static_cast<double>(generated);
    if (tw_block_count_ > 0) metrics_.t_w_blocks = tw_block_sum_ / static_cast<double>(tw_block_count_);
    if (tw_pow_count_ > 0) metrics_.t_w_pows = tw_pow_sum_ / static_cast<double>(tw_pow_count_);
    return metrics_;
}

bool Engine::done() const
{
    const auto& s = cfg_.stop;
    const bool counted = s.finalized_blocks > 0 || s.post_ties > 0 || s.pre_ties > 0;
    if (!counted) return false; // time limit only
    return metrics_.main_chain_blocks >= s.finalized_blocks && post_measured_ >= s.post_ties && pre_measured_ >= s.pre_ties;
}

// ---------------------------------------------------------------- generation

void Engine::on_generation()
{
    const double pick = detail::uniform01(gen_rng_) * generation_weights_.back();
    auto it = std::upper_bound(generation_weights_.begin(), generation_weights_.end(), pick);
    const MinerId m = static_cast<MinerId>(std::min<std::size_t>(it - generation_weights_.begin(), miners_.size() - 1));
    MinerState& miner = miners_[m];
    const bool is_block = detail::uniform01(gen_rng_) * static_cast<double>(miner.adjuster) < 1.0;

    const PowIdx p = new_pow(m, is_block);
    if (!is_block) {
        log(m, "POW_GENERATED", {pows_[p].pow.id});
        if (!miner.adversarial) publish_pow(p, m);
        pool_.push_back(p);
        return;
    }

    const BlockIdx parent = miner.adversarial ? attacker_->head : miner.target;
    const BlockIdx b = new_block(m, parent, p);
    log(m, "BLOCK_GENERATED", {blocks_[b].block.id, blocks_[parent].block.id});
    pool_.push_back(p);

    if (miner.adversarial) {
        attacker_found_block(b);
    } else {
        if (!verify_commitment(blocks_[b].block)) ++metrics_.invalid_commitments;
        publish_block(b, m);
    }
    update_finality();
}

PowIdx Engine::new_pow(MinerId producer, bool is_block)
{
    PowState p;
    p.pow.id = fresh_digest();
    p.pow.producer = producer;
    p.pow.creation_time = now_;
    p.pow.is_block = is_block;
    if (cfg_.params.mode == AdjusterMode::Variable) {
        // the header commits to its adjuster through the top timestamp bits
        const auto stamp = encode_difficulty_adjuster(static_cast<std::uint32_t>(now_), miners_[producer].adjuster);
        p.pow.adjuster = decode_difficulty_adjuster(stamp);
    } else {
        p.pow.adjuster = cfg_.params.n;
    }
    p.arrival.assign(miners_.size(), kNever);
    p.arrival[producer] = now_;
    const auto idx = static_cast<PowIdx>(pows_.size());
    pow_index_.emplace(p.pow.id, idx);
    pows_.push_back(std::move(p));
    ++metrics_.pows_generated;
    return idx;
}

BlockIdx Engine::new_block(MinerId producer, BlockIdx parent, PowIdx header)
{
    BlockState b;
    b.parent = parent;
    b.header = header;
    b.set = build_shared_set(producer, parent);
    b.block.id = pows_[header].pow.id;
    b.block.parent = blocks_[parent].block.id;
    b.block.height = blocks_[parent].block.height + 1;
    b.block.producer = producer;
    b.block.creation_time = now_;
    b.block.shared_set.reserve(b.set.size());
    for (auto p : b.set) b.block.shared_set.push_back(pows_[p].pow.id);
    std::sort(b.block.shared_set.begin(), b.block.shared_set.end());
    b.block.commitment = compute_commitment(b.block.shared_set);
    b.due.assign(miners_.size(), kNever);
    b.arrival.assign(miners_.size(), kNever);
    b.due[producer] = now_;
    b.arrival[producer] = now_;

    const auto idx = static_cast<BlockIdx>(blocks_.size());
    for (auto p : b.set) pows_[p].containing.push_back(idx);
    pows_[header].containing.push_back(idx);
    if (generated_at_height_.size() <= b.block.height) generated_at_height_.resize(b.block.height + 1, 0);
    ++generated_at_height_[b.block.height];
    blocks_.push_back(std::move(b));
    ++metrics_.blocks_generated;
    return idx;
}

std::vector<PowIdx> Engine::build_shared_set(MinerId m, BlockIdx parent) const
{
    const MinerState& miner = miners_[m];
    const bool instant = miner.adversarial && cfg_.attacker_instant_inclusion;
    const Seconds local_now = miner.local(now_);
    std::vector<PowIdx> out;
    for (PowIdx p : pool_) {
        const PowState& ps = pows_[p];
        if (ps.finalized) continue;
        const Seconds at = ps.arrival[m];
        if (at > now_) continue;
        if (!instant && !(local_now - miner.local(at) > delays_.inclusion_delay)) continue;
        if (in_chain(p, parent)) continue;
        out.push_back(p);
    }
    return out;
}

// --------------------------------------------------------------- propagation

void Engine::publish_pow(PowIdx p, MinerId from)
{
    PowState& ps = pows_[p];
    if (ps.finalized || ps.publish_time != kNever) return;
    ps.publish_time = now_;
    log(from, "POW_PUBLISHED", {ps.pow.id});
    const Seconds bound = cfg_.topology->bound(MessageKind::PartialPow);
    double weighted = 0.0;
    for (MinerId j = 0; j < miners_.size(); ++j) {
        if (j == from) continue;
        const Seconds d = cfg_.topology->delay(from, j, MessageKind::PartialPow, p);
        if (d < 0.0) ++metrics_.causality_violations;
        if (d > 0.0 && !(d < bound)) ++metrics_.bound_violations;
        metrics_.max_pow_delay = std::max(metrics_.max_pow_delay, d);
        weighted += d * miners_[j].spec.hashrate_fraction;
        ps.arrival[j] = std::min(ps.arrival[j], now_ + std::max(0.0, d));
    }
    if (!miners_[from].adversarial) {
        tw_pow_sum_ += weighted;
        ++tw_pow_count_;
    }
}

void Engine::publish_block(BlockIdx b, MinerId from)
{
    BlockState& bs = blocks_[b];
    if (bs.publish_time != kNever) return;
    bs.publish_time = now_;
    log(from, "BLOCK_PUBLISHED", {bs.block.id});
    const Seconds bound = cfg_.topology->bound(MessageKind::Block);
    double weighted = 0.0;
    for (MinerId j = 0; j < miners_.size(); ++j) {
        if (j == from) continue;
        const Seconds d = cfg_.topology->delay(from, j, MessageKind::Block, b);
        if (d < 0.0) ++metrics_.causality_violations;
        if (d > 0.0 && !(d < bound)) ++metrics_.bound_violations;
        metrics_.max_block_delay = std::max(metrics_.max_block_delay, d);
        weighted += d * miners_[j].spec.hashrate_fraction;
        bs.due[j] = now_ + std::max(0.0, d);
        // the shared set and the header travel with the block
        for (PowIdx p : bs.set)
            if (!pows_[p].finalized) pows_[p].arrival[j] = std::min(pows_[p].arrival[j], bs.due[j]);
        if (!pows_[bs.header].finalized)
            pows_[bs.header].arrival[j] = std::min(pows_[bs.header].arrival[j], bs.due[j]);
        schedule(bs.due[j], EventKind::MessageArrival, j, b);
    }
    for (PowIdx p : bs.set)
        if (pows_[p].publish_time == kNever) pows_[p].publish_time = now_;
    pows_[bs.header].publish_time = now_;
    if (!miners_[from].adversarial) {
        tw_block_sum_ += weighted;
        ++tw_block_count_;
    }
    // the producer knows its own block already
    accept_block(b, from);
}

void Engine::deliver(BlockIdx b, MinerId to)
{
    BlockState& bs = blocks_[b];
    if (bs.arrival[to] != kNever) return;
    if (blocks_[bs.parent].arrival[to] == kNever) {
        miners_[to].waiting[bs.parent].push_back(b);
        return;
    }
    accept_block(b, to);
}

void Engine::accept_block(BlockIdx b, MinerId to)
{
    std::vector<BlockIdx> ready{b};
    MinerState& miner = miners_[to];
    bool changed = false;
    while (!ready.empty()) {
        const BlockIdx cur = ready.back();
        ready.pop_back();
        BlockState& bs = blocks_[cur];
        if (bs.arrival[to] == kNever || bs.block.producer == to) {
            bs.arrival[to] = std::min(bs.arrival[to], now_);
            if (bs.block.producer != to) log(to, "BLOCK_ARRIVED", {bs.block.id});
        }
        const auto h = bs.block.height;
        if (h > miner.max_height) {
            miner.max_height = h;
            miner.tips.assign(1, cur);
            changed = true;
        } else if (h == miner.max_height && std::find(miner.tips.begin(), miner.tips.end(), cur) == miner.tips.end()) {
            miner.tips.push_back(cur);
            changed = true;
        }
        if (auto it = miner.waiting.find(cur); it != miner.waiting.end()) {
            for (auto child : it->second)
                if (blocks_[child].arrival[to] == kNever) ready.push_back(child);
            miner.waiting.erase(it);
        }
        if (miner.adversarial && bs.block.producer != to) attacker_saw_block(cur);
    }
    if (changed && !miner.adversarial) reselect(to);
}

// ------------------------------------------------------------ honest miners

void Engine::reselect(MinerId m)
{
    MinerState& miner = miners_[m];
    const BlockIdx previous = miner.target;
    if (miner.tips.size() == 1) {
        miner.target = miner.tips.front();
        miner.cached_best.clear();
        miner.cached_choice = kNone;
    } else {
        // Chains only need the part above the common ancestor of all tips,
        // plus the recent prefix whose partial PoWs may not be sufficiently
        // shared yet; the older prefix adds the same weight to every tip.
        BlockIdx base = miner.tips.front();
        for (auto t : miner.tips) base = lca(base, t);
        std::vector<const Block*> prefix;
        if (miner.spec.sufficiency_check) {
            for (BlockIdx cur = base; cur != kNone; cur = blocks_[cur].parent) {
                const auto& bs = blocks_[cur];
                if (miner.local(now_) - miner.local(bs.arrival[m]) > delays_.sufficiently_shared_delay) break;
                prefix.push_back(&bs.block);
                if (bs.parent == kNone) break;
            }
            std::reverse(prefix.begin(), prefix.end());
        }
        std::vector<Chain> chains;
        chains.reserve(miner.tips.size());
        for (auto t : miner.tips) {
            Chain c;
            std::vector<const Block*> suffix;
            for (BlockIdx cur = t; cur != base; cur = blocks_[cur].parent) suffix.push_back(&blocks_[cur].block);
            std::reverse(suffix.begin(), suffix.end());
            c.blocks = prefix;
            c.blocks.insert(c.blocks.end(), suffix.begin(), suffix.end());
            if (c.blocks.empty()) c.blocks.push_back(&blocks_[t].block);
            c.arrival_time = miner.local(blocks_[t].arrival[m]);
            chains.push_back(std::move(c));
        }

        MinerPowStore store(*this, m);
        fork_choice::LocalView view;
        view.store = &store;
        view.now = miner.local(now_);
        view.delays = delays_;
        view.mode = cfg_.params.mode;
        view.check_sufficiency = miner.spec.sufficiency_check;

        const auto best_idx = fork_choice::best_candidates(chains, view);
        std::vector<BlockIdx> best;
        for (auto i : best_idx) best.push_back(miner.tips[i]);

        const bool same = best == miner.cached_best &&
                          std::find(best.begin(), best.end(), miner.cached_choice) != best.end();
        if (!same) {
            miner.cached_best = best;
            miner.cached_choice = best.size() == 1 ? best.front() : best[fork_choice::uniform_index(miner.rng, best.size())];
        }
        miner.target = miner.cached_choice;
    }
    if (blocks_[miner.target].block.height < blocks_[previous].block.height) ++metrics_.chain_violations;
    if (miner.target != previous) log(m, "MAIN_CHAIN", {blocks_[miner.target].block.id});
}

// ------------------------------------------------------------------ attacker

void Engine::attacker_found_block(BlockIdx b)
{
    AttackerState& a = *attacker_;
    a.head = b;
    a.unpublished.push_back(b);
    schedule(now_ + cfg_.publish_delay(), EventKind::PowRelease, a.id, b);

    const auto height = blocks_[b].block.height;
    if (a.unresponsive) {
        // match against the pre-generated honest block
        a.unresponsive = false;
        ++a.timeout_token;
        const BlockIdx honest = a.ignored;
        a.ignored = kNone;
        attacker_publish_through(height);
        a.in_tie = true;
        open_tie(TieKind::Pre, b, honest);
        return;
    }
    if (a.in_tie) {
        // extending our side of an open tie settles it
        a.in_tie = false;
        attacker_publish_through(height);
        return;
    }
    const std::uint64_t lead = height > a.public_height ? height - a.public_height : 0;
    if (cfg_.max_private_lead > 0 && lead >= cfg_.max_private_lead) attacker_publish_through(height);
}

void Engine::attacker_saw_block(BlockIdx b)
{
    AttackerState& a = *attacker_;
    const BlockState& bs = blocks_[b];
    const auto hb = bs.block.height;
    if (hb < a.public_height) return;
    a.public_height = hb;
    log(a.id, "ATTACKER_SAW", {bs.block.id});

    if (a.unresponsive) {
        // a further honest block ends the unresponsive period
        a.unresponsive = false;
        ++a.timeout_token;
        a.ignored = kNone;
        attacker_adopt(b);
        return;
    }

    const auto priv = blocks_[a.head].block.height;
    const bool idle = a.unpublished.empty() && !a.in_tie;
    if (cfg_.strategy == Strategy::ExtendedSelfishMining && cfg_.unresponsive_time > 0.0 && idle && bs.parent == a.head) {
        a.unresponsive = true;
        a.ignored = b;
        ++a.timeout_token;
        const Seconds wait = cfg_.unresponsive_time / (1.0 + miners_[a.id].spec.drift);
        schedule(now_ + wait, EventKind::UnresponsiveTimeout, a.id, a.timeout_token);
        log(a.id, "UNRESPONSIVE", {bs.block.id});
        return;
    }

    if (priv < hb) {
        attacker_adopt(b);
        return;
    }
    if (a.unpublished.empty()) return;
    if (priv == hb) {
        // lead 1 -> 0: match against the post-generated block
        const BlockIdx mine = a.head;
        attacker_publish_through(priv);
        a.in_tie = true;
        open_tie(TieKind::Post, mine, b);
    } else if (priv == hb + 1) {
        // lead 2 -> 1: release everything, orphaning the honest block
        a.in_tie = false;
        attacker_publish_through(priv);
    } else {
        attacker_publish_through(hb);
    }
}

void Engine::attacker_publish_through(std::uint64_t height)
{
    AttackerState& a = *attacker_;
    std::size_t released = 0;
    for (auto b : a.unpublished) {
        if (blocks_[b].block.height > height) break;
        publish_block(b, a.id);
        a.public_height = std::max(a.public_height, blocks_[b].block.height);
        ++released;
    }
    a.unpublished.erase(a.unpublished.begin(), a.unpublished.begin() + static_cast<std::ptrdiff_t>(released));
}

void Engine::attacker_adopt(BlockIdx b)
{
    AttackerState& a = *attacker_;
    a.head = b;
    a.unpublished.clear();
    a.in_tie = false;
    a.public_height = std::max(a.public_height, blocks_[b].block.height);
    log(a.id, "ATTACKER_ADOPT", {blocks_[b].block.id});
}

void Engine::on_timeout(std::uint64_t token)
{
    AttackerState& a = *attacker_;
    if (!a.unresponsive || token != a.timeout_token) return;
    a.unresponsive = false;
    const BlockIdx honest = a.ignored;
    a.ignored = kNone;
    log(a.id, "TIMEOUT", {blocks_[honest].block.id});
    attacker_adopt(honest);
}

void Engine::on_release(BlockIdx b)
{
    const MinerId att = attacker_->id;
    for (PowIdx p : blocks_[b].set)
        if (pows_[p].pow.producer == att) publish_pow(p, att);
}

void Engine::open_tie(TieKind kind, BlockIdx attacker_block, BlockIdx honest_block)
{
    PendingTie t{kind, attacker_block, honest_block, now_};
    // measure once every honest miner's acceptance window around the tie has closed
    Seconds at = now_;
    for (const auto& m : miners_) {
        if (m.adversarial) continue;
        const Seconds first = std::min(blocks_[attacker_block].due[m.spec.id], blocks_[honest_block].due[m.spec.id]);
        at = std::max(at, first + delays_.acceptance_window / (1.0 + m.spec.drift));
    }
    log(attacker_->id, kind == TieKind::Post ? "TIE_POST" : "TIE_PRE",
        {blocks_[attacker_block].block.id, blocks_[honest_block].block.id});
    pending_ties_.push_back(t);
    schedule(at + 1e-6, EventKind::WindowExpiry, attacker_->id, pending_ties_.size() - 1);
}

void Engine::measure_tie(std::size_t index)
{
    const PendingTie& t = pending_ties_[index];
    TieObservation obs;
    obs.kind = t.kind;
    obs.created = t.created;
    obs.measured = now_;
    obs.attacker_head = blocks_[t.attacker_block].block.id;
    obs.honest_head = blocks_[t.honest_block].block.id;
    for (const auto& m : miners_) {
        if (m.adversarial || m.spec.hashrate_fraction <= 0.0) continue;
        const MinerId j = m.spec.id;
        HonestChoice c;
        c.miner = j;
        c.hashrate = m.spec.hashrate_fraction;
        c.on_attacker = is_ancestor_or_equal(t.attacker_block, m.target);
        const Seconds gap = std::abs(blocks_[t.attacker_block].due[j] - blocks_[t.honest_block].due[j]);
        c.both_kept = m.local(gap) <= delays_.acceptance_window;
        obs.choices.push_back(c);
    }
    log(attacker_->id, "TIE_MEASURED", {obs.attacker_head, obs.honest_head});
    if (t.kind == TieKind::Post) ++post_measured_;
    else ++pre_measured_;
    metrics_.ties.push_back(std::move(obs));
}

// ------------------------------------------------------------ chain helpers

bool Engine::is_ancestor_or_equal(BlockIdx ancestor, BlockIdx b) const
{
    const auto h = blocks_[ancestor].block.height;
    while (b != kNone && blocks_[b].block.height > h) b = blocks_[b].parent;
    return b == ancestor;
}

BlockIdx Engine::ancestor_at(BlockIdx b, std::uint64_t height) const
{
    while (blocks_[b].block.height > height) b = blocks_[b].parent;
    return b;
}

BlockIdx Engine::lca(BlockIdx a, BlockIdx b) const
{
    const auto h = std::min(blocks_[a].block.height, blocks_[b].block.height);
    a = ancestor_at(a, h);
    b = ancestor_at(b, h);
    while (a != b) {
        a = blocks_[a].parent;
        b = blocks_[b].parent;
    }
    return a;
}

bool Engine::in_chain(PowIdx p, BlockIdx head) const
{
    for (BlockIdx c : pows_[p].containing)
        if (is_ancestor_or_equal(c, head)) return true;
    return false;
}

void Engine::update_finality()
{
    BlockIdx common = kNone;
    for (const auto& m : miners_) {
        const BlockIdx t = m.adversarial ? attacker_->head : m.target;
        common = common == kNone ? t : lca(common, t);
    }
    const auto h = blocks_[common].block.height;
    if (h < cfg_.finality_depth) return;
    const auto final_height = h - cfg_.finality_depth;
    if (final_height <= blocks_[finalized_].block.height) return;

    const BlockIdx tip = ancestor_at(common, final_height);
    if (!is_ancestor_or_equal(finalized_, tip)) ++metrics_.finality_violations;

    std::vector<BlockIdx> fresh;
    for (BlockIdx cur = tip; cur != finalized_ && cur != kNone && blocks_[cur].block.height > blocks_[finalized_].block.height;
         cur = blocks_[cur].parent)
        fresh.push_back(cur);
    const auto attacker = cfg_.attacker();
    for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) {
        BlockState& bs = blocks_[*it];
        ++metrics_.main_chain_blocks;
        ++metrics_.blocks_per_miner[bs.block.producer];
        if (attacker && bs.block.producer == *attacker) ++metrics_.attacker_blocks;
        auto finalize = [&](PowIdx p) {
            pows_[p].finalized = true;
            std::vector<Seconds>().swap(pows_[p].arrival);
        };
        for (auto p : bs.set) finalize(p);
        finalize(bs.header);
    }
    finalized_ = tip;
    std::erase_if(pool_, [&](PowIdx p) { return pows_[p].finalized; });
}

} // namespace

SimMetrics run(const SimConfig& config)
{
    config.validate();
    Engine engine(config);
    return engine.run();
}

} // namespace ppow::sim
