// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PPOW_SIMULATOR_HPP
#define PPOW_SIMULATOR_HPP

#include <ppow/core.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

namespace ppow::sim {

enum class Role { Honest, Attacker };
enum class Strategy { HonestOnly, SelfishMining, ExtendedSelfishMining };
enum class MessageKind : std::uint8_t { Block, PartialPow };
enum class TieKind { Post, Pre };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

struct MinerSpec {
    MinerId id = 0;
    double hashrate_fraction = 0.0;
    Role role = Role::Honest;
    double drift = 0.0;                ///< local = global * (1 + drift)
    bool sufficiency_check = false;    ///< honest miners only
    std::uint32_t adjuster = 0;        ///< 0: use ProtocolParams::n
};

/**
 * Per-message propagation delays. Implementations must be pure functions of
 * their arguments so that runs are reproducible.
 */
class Topology {
public:
    Topology(Seconds delta_b, Seconds delta_p) : delta_b_(delta_b), delta_p_(delta_p) {}
    virtual ~Topology() = default;

    virtual Seconds delay(MinerId from, MinerId to, MessageKind kind, std::uint64_t message) const = 0;

    Seconds bound(MessageKind kind) const { return kind == MessageKind::Block ? delta_b_ : delta_p_; }
    Seconds delta_b() const { return delta_b_; }
    Seconds delta_p() const { return delta_p_; }

private:
    Seconds delta_b_;
    Seconds delta_p_;
};

/**
 * Complete graph with independent delays uniform in [lo*bound, hi*bound)
 * per (message, receiver). Messages to or from `instant_miner` are delivered
 * with zero delay.
 */
class UniformTopology final : public Topology {
public:
    UniformTopology(Seconds delta_b, Seconds delta_p, std::uint64_t seed,
                    std::optional<MinerId> instant_miner = std::nullopt, double lo = 0.2, double hi = 0.9);

    Seconds delay(MinerId from, MinerId to, MessageKind kind, std::uint64_t message) const override;

private:
    std::uint64_t seed_;
    std::optional<MinerId> instant_;
    double lo_;
    double hi_;
};

/**
 * Fixed pairwise latencies read from a text file with lines
 * `from to block_delay pow_delay`; '#' starts a comment. Unlisted pairs use
 * the fallback topology.
 */
class MatrixTopology final : public Topology {
public:
    MatrixTopology(Seconds delta_b, Seconds delta_p, std::size_t miners, std::shared_ptr<const Topology> fallback);
    static std::shared_ptr<MatrixTopology> load(const std::string& path, Seconds delta_b, Seconds delta_p,
                                                std::size_t miners, std::shared_ptr<const Topology> fallback);

    void set(MinerId from, MinerId to, Seconds block_delay, Seconds pow_delay);
    Seconds delay(MinerId from, MinerId to, MessageKind kind, std::uint64_t message) const override;

private:
    std::size_t miners_;
    std::vector<Seconds> block_;
    std::vector<Seconds> pow_;
    std::shared_ptr<const Topology> fallback_;
};

struct StopCriteria {
    std::uint64_t finalized_blocks = 0; ///< main-chain blocks at depth >= finality_depth
    std::uint64_t post_ties = 0;
    std::uint64_t pre_ties = 0;
    Seconds max_time = std::numeric_limits<Seconds>::infinity();

    bool any() const;
};

struct SimConfig {
    ProtocolParams params;
    std::vector<MinerSpec> miners;
    std::shared_ptr<const Topology> topology;
    Strategy strategy = Strategy::HonestOnly;
    Seconds unresponsive_time = 0.0;
    StopCriteria stop;
    std::uint64_t seed = 1;
    /// Delay between finding a private block and releasing its withheld partial PoWs; negative means delta_b.
    Seconds attacker_pow_publish_delay = -1.0;
    bool attacker_instant_inclusion = true;
    /// Publish the whole private chain once its lead reaches this value; 0 disables the cap.
    std::uint32_t max_private_lead = 0;
    std::uint32_t finality_depth = 6;
    /// Optional line-delimited event log sink.
    std::ostream* event_log = nullptr;

    /** Throws std::invalid_argument describing the first problem found. */
    void validate() const;
    std::optional<MinerId> attacker() const;
    Seconds publish_delay() const { return attacker_pow_publish_delay < 0.0 ? params.delta_b : attacker_pow_publish_delay; }
};

struct NetworkOptions {
    double alpha = 0.0;               ///< attacker hashrate; 0 with HonestOnly means no attacker miner
    std::size_t honest_miners = 30;
    bool attacker_zero_delay = true;
    bool honest_sufficiency_check = false;
    bool random_drift = false;        ///< draw each drift uniformly from [-D, D]
    bool unequal_hashrates = false;   ///< honest shares drawn from a seeded exponential split
};

/**
 * Builds a SimConfig with the attacker as miner 0 (when present) followed by
 * honest miners, a UniformTopology and attacker-favoring defaults.
 */
SimConfig make_config(const ProtocolParams& params, Strategy strategy, const NetworkOptions& net, std::uint64_t seed);

struct HonestChoice {
    MinerId miner = 0;
    double hashrate = 0.0;
    bool on_attacker = false;
    bool both_kept = false; ///< both tied heads fell inside this miner's acceptance window

    friend bool operator==(const HonestChoice&, const HonestChoice&) = default;
};

struct TieObservation {
    TieKind kind = TieKind::Post;
    Seconds created = 0.0;
    Seconds measured = 0.0;
    Digest attacker_head;
    Digest honest_head;
    std::vector<HonestChoice> choices;

    /** Fraction of honest hashrate whose mining target extends the attacker's head. */
    double attacker_share() const;

    friend bool operator==(const TieObservation&, const TieObservation&) = default;
};

struct TieStats {
    std::uint64_t count = 0;
    double mean = 0.0;
    double sigma = 0.0;          ///< binomial standard error sqrt(mean(1-mean)/count)
    double ci_half_width = 0.0;  ///< 1.96 * sigma

    friend bool operator==(const TieStats&, const TieStats&) = default;
};

struct GammaEstimate {
    TieStats post;
    TieStats pre;
};

class EmptyLogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Averages per-tie honest shares by tie kind. Throws EmptyLogError without ties. */
GammaEstimate measure_gamma(std::span<const TieObservation> ties);

struct SimMetrics {
    TieStats ties_post;
    TieStats ties_pre;
    std::vector<TieObservation> ties;

    std::uint64_t main_chain_blocks = 0;   ///< finalized, excluding genesis
    std::uint64_t attacker_blocks = 0;
    std::vector<std::uint64_t> blocks_per_miner;
    double relative_revenue = 0.0;
    double stale_rate = 0.0;

    double t_w_blocks = 0.0;
    double t_w_pows = 0.0;
    Seconds max_block_delay = 0.0;
    Seconds max_pow_delay = 0.0;

    std::uint64_t blocks_generated = 0;
    std::uint64_t pows_generated = 0;
    std::uint64_t events_processed = 0;
    Seconds simulated_time = 0.0;

    std::uint64_t invalid_commitments = 0;  ///< honest blocks failing verify_commitment
    std::uint64_t causality_violations = 0; ///< negative delays or events scheduled in the past
    std::uint64_t bound_violations = 0;     ///< delays not below their propagation bound
    std::uint64_t finality_violations = 0;  ///< reorgs below the finalized height
    std::uint64_t chain_violations = 0;     ///< main-chain targets that are not parent-linked

    friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

/** Runs one seeded simulation. Deterministic for a fixed config. */
SimMetrics run(const SimConfig& config);

} // namespace ppow::sim

#endif // PPOW_SIMULATOR_HPP
