// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/simulator.hpp>

#include "random.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace ppow::sim {

const char* to_string(Strategy s)
{
    switch (s) {
    case Strategy::HonestOnly: return "honest";
    case Strategy::SelfishMining: return "sm";
    case Strategy::ExtendedSelfishMining: return "esm";
    }
    return "?";
}

Strategy parse_strategy(const std::string& text)
{
    if (text == "honest" || text == "honest-only") return Strategy::HonestOnly;
    if (text == "sm" || text == "SM") return Strategy::SelfishMining;
    if (text == "esm" || text == "ESM") return Strategy::ExtendedSelfishMining;
    throw std::invalid_argument("unknown strategy '" + text + "' (expected honest, sm or esm)");
}

UniformTopology::UniformTopology(Seconds delta_b, Seconds delta_p, std::uint64_t seed,
                                 std::optional<MinerId> instant_miner, double lo, double hi)
    : Topology(delta_b, delta_p), seed_(seed), instant_(instant_miner), lo_(lo), hi_(hi)
{
    if (!(lo >= 0.0) || !(hi <= 1.0) || !(lo <= hi)) throw std::invalid_argument("delay fractions must satisfy 0 <= lo <= hi <= 1");
}

Seconds UniformTopology::delay(MinerId from, MinerId to, MessageKind kind, std::uint64_t message) const
{
    if (from == to) return 0.0;
    if (instant_ && (from == *instant_ || to == *instant_)) return 0.0;
    std::uint64_t h = detail::splitmix64(seed_ ^ (message * 0x9e3779b97f4a7c15ULL));
    h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(to) << 1) ^ static_cast<std::uint64_t>(kind));
    const double u = detail::to_unit(h);
    return bound(kind) * (lo_ + (hi_ - lo_) * u);
}

MatrixTopology::MatrixTopology(Seconds delta_b, Seconds delta_p, std::size_t miners,
                               std::shared_ptr<const Topology> fallback)
    : Topology(delta_b, delta_p),
      miners_(miners),
      block_(miners * miners, -1.0),
      pow_(miners * miners, -1.0),
      fallback_(std::move(fallback))
{
}

void MatrixTopology::set(MinerId from, MinerId to, Seconds block_delay, Seconds pow_delay)
{
    if (from >= miners_ || to >= miners_) throw std::out_of_range("latency matrix entry names an unknown miner");
    if (block_delay < 0.0 || pow_delay < 0.0) throw std::invalid_argument("latency matrix delays must be non-negative");
    block_[from * miners_ + to] = block_delay;
    pow_[from * miners_ + to] = pow_delay;
}

Seconds MatrixTopology::delay(MinerId from, MinerId to, MessageKind kind, std::uint64_t message) const
{
    if (from == to) return 0.0;
    const auto& table = kind == MessageKind::Block ? block_ : pow_;
    const Seconds d = table[from * miners_ + to];
    if (d >= 0.0) return d;
    return fallback_ ? fallback_->delay(from, to, kind, message) : 0.0;
}

std::shared_ptr<MatrixTopology> MatrixTopology::load(const std::string& path, Seconds delta_b, Seconds delta_p,
                                                     std::size_t miners, std::shared_ptr<const Topology> fallback)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open latency matrix '" + path + "'");
    auto topo = std::make_shared<MatrixTopology>(delta_b, delta_p, miners, std::move(fallback));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        unsigned from = 0, to = 0;
        double block_delay = 0.0, pow_delay = 0.0;
        if (!(fields >> from)) continue;
        if (!(fields >> to >> block_delay >> pow_delay))
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected 'from to block_delay pow_delay'");
        topo->set(from, to, block_delay, pow_delay);
    }
    return topo;
}

bool StopCriteria::any() const
{
    return finalized_blocks > 0 || post_ties > 0 || pre_ties > 0 || std::isfinite(max_time);
}

std::optional<MinerId> SimConfig::attacker() const
{
    for (const auto& m : miners)
        if (m.role == Role::Attacker) return m.id;
    return std::nullopt;
}

void SimConfig::validate() const
{
    params.validate();
    if (miners.empty()) throw std::invalid_argument("at least one miner is required");
    if (!topology) throw std::invalid_argument("a topology is required");
    double total = 0.0;
    int attackers = 0;
    for (std::size_t i = 0; i < miners.size(); ++i) {
        const auto& m = miners[i];
        if (m.id != i) throw std::invalid_argument("miner ids must be 0..N-1 in order");
        if (!(m.hashrate_fraction >= 0.0) || !(m.hashrate_fraction <= 1.0))
            throw std::invalid_argument("hashrate fractions must lie in [0, 1]");
        if (!(std::abs(m.drift) <= params.D)) throw std::invalid_argument("miner drift exceeds the bound D");
        if (m.adjuster != 0 && params.mode == AdjusterMode::Fixed && m.adjuster != params.n)
            throw std::invalid_argument("per-miner adjusters require n-variable mode");
        total += m.hashrate_fraction;
        if (m.role == Role::Attacker) ++attackers;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("hashrate fractions must sum to 1");
    if (attackers > 1) throw std::invalid_argument("at most one attacker is supported");
    if (strategy != Strategy::HonestOnly && attackers == 0)
        throw std::invalid_argument("selfish strategies need an attacker miner");
    if (!(unresponsive_time >= 0.0)) throw std::invalid_argument("unresponsive time must be non-negative");
    if (strategy == Strategy::SelfishMining && unresponsive_time != 0.0)
        throw std::invalid_argument("selfish mining fixes the unresponsive time to 0");
    if (!stop.any()) throw std::invalid_argument("no stop criterion given");
    if (stop.post_ties > 0 && strategy == Strategy::HonestOnly)
        throw std::invalid_argument("post ties cannot occur without a selfish attacker");
    if (stop.pre_ties > 0 && !(strategy == Strategy::ExtendedSelfishMining && unresponsive_time > 0.0))
        throw std::invalid_argument("pre ties need extended selfish mining with a positive unresponsive time");
    if (finality_depth < 1) throw std::invalid_argument("finality depth must be at least 1");
}

SimConfig make_config(const ProtocolParams& params, Strategy strategy, const NetworkOptions& net, std::uint64_t seed)
{
    if (net.honest_miners == 0) throw std::invalid_argument("at least one honest miner is required");
    if (!(net.alpha >= 0.0) || !(net.alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");

    SimConfig cfg;
    cfg.params = params;
    cfg.strategy = strategy;
    cfg.seed = seed;

    std::mt19937_64 rng(detail::substream(seed, 0x6e6574));
    const bool with_attacker = strategy != Strategy::HonestOnly || net.alpha > 0.0;
    MinerId next = 0;
    if (with_attacker) {
        MinerSpec a;
        a.id = next++;
        a.role = Role::Attacker;
        a.hashrate_fraction = net.alpha;
        cfg.miners.push_back(a);
    }

    std::vector<double> shares(net.honest_miners, 1.0);
    if (net.unequal_hashrates)
        for (auto& s : shares) s = detail::exponential(rng, 1.0);
    const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    for (std::size_t i = 0; i < net.honest_miners; ++i) {
        MinerSpec m;
        m.id = next++;
        m.hashrate_fraction = (1.0 - net.alpha) * shares[i] / sum;
        m.sufficiency_check = net.honest_sufficiency_check;
        cfg.miners.push_back(m);
    }
    // renormalise away rounding so fractions sum to exactly 1 within validation tolerance
    double total = 0.0;
    for (const auto& m : cfg.miners) total += m.hashrate_fraction;
    cfg.miners.back().hashrate_fraction += 1.0 - total;

    if (net.random_drift)
        for (auto& m : cfg.miners) m.drift = params.D * (2.0 * detail::uniform01(rng) - 1.0);

    std::optional<MinerId> instant;
    if (with_attacker && net.attacker_zero_delay) instant = 0;
    cfg.topology = std::make_shared<UniformTopology>(params.delta_b, params.delta_p, detail::substream(seed, 0x746f706f),
                                                     instant);
    return cfg;
}

double TieObservation::attacker_share() const
{
    double on = 0.0, total = 0.0;
    for (const auto& c : choices) {
        total += c.hashrate;
        if (c.on_attacker) on += c.hashrate;
    }
    return total > 0.0 ? on / total : 0.0;
}

namespace {

TieStats summarize(std::span<const TieObservation> ties, TieKind kind)
{
    TieStats s;
    double sum = 0.0;
    for (const auto& t : ties) {
        if (t.kind != kind) continue;
        ++s.count;
        sum += t.attacker_share();
    }
    if (s.count == 0) return s;
    s.mean = sum / static_cast<double>(s.count);
    s.sigma = std::sqrt(s.mean * (1.0 - s.mean) / static_cast<double>(s.count));
    s.ci_half_width = 1.96 * s.sigma;
    return s;
}

} // namespace

GammaEstimate measure_gamma(std::span<const TieObservation> ties)
{
    if (ties.empty()) throw EmptyLogError("measure_gamma: the event log contains no ties");
    return {summarize(ties, TieKind::Post), summarize(ties, TieKind::Pre)};
}

} // namespace ppow::sim
