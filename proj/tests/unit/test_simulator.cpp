// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/analytic.hpp>
#include <ppow/simulator.hpp>

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace ppow;
using namespace ppow::sim;

namespace {

SimConfig selfish(double alpha, double delta, std::uint64_t seed, Strategy strategy = Strategy::SelfishMining)
{
    ProtocolParams p;
    p.delta_b = delta;
    p.delta_p = delta;
    NetworkOptions net;
    net.alpha = alpha;
    net.honest_miners = 20;
    return make_config(p, strategy, net, seed);
}

struct Record {
    double time;
    MinerId miner;
    std::string kind;
    std::vector<std::string> ids;
};

std::vector<Record> parse_log(const std::string& text)
{
    std::vector<Record> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        Record r;
        std::string time, miner, ids;
        std::getline(f, time, '\t');
        std::getline(f, miner, '\t');
        std::getline(f, r.kind, '\t');
        std::getline(f, ids);
        r.time = std::stod(time);
        r.miner = static_cast<MinerId>(std::stoul(miner));
        std::istringstream idstream(ids);
        std::string id;
        while (std::getline(idstream, id, ',')) r.ids.push_back(id);
        out.push_back(r);
    }
    return out;
}

struct Replay {
    std::vector<Record> records;
    std::map<std::string, std::string> parent;
    std::map<std::string, std::uint64_t> height;
    std::map<std::string, MinerId> producer;

    explicit Replay(const std::string& text) : records(parse_log(text))
    {
        height[std::string(64, '0')] = 0;
        for (const auto& r : records) {
            if (r.kind != "BLOCK_GENERATED") continue;
            parent[r.ids[0]] = r.ids[1];
            height[r.ids[0]] = height.at(r.ids[1]) + 1;
            producer[r.ids[0]] = r.miner;
        }
    }

    bool extends(std::string tip, const std::string& ancestor) const
    {
        const auto h = height.at(ancestor);
        while (height.at(tip) > h) tip = parent.at(tip);
        return tip == ancestor;
    }
};

std::pair<SimMetrics, std::string> run_logged(SimConfig cfg)
{
    std::ostringstream log;
    cfg.event_log = &log;
    auto m = run(cfg);
    return {m, log.str()};
}

void check_invariants(const SimMetrics& m, const SimConfig& cfg)
{
    CHECK(m.invalid_commitments == 0);
    CHECK(m.causality_violations == 0);
    CHECK(m.bound_violations == 0);
    CHECK(m.finality_violations == 0);
    CHECK(m.chain_violations == 0);
    CHECK(m.t_w_blocks < cfg.params.delta_b);
    CHECK(m.t_w_pows < cfg.params.delta_p);
    CHECK(m.max_block_delay < cfg.params.delta_b);
    CHECK(m.max_pow_delay < cfg.params.delta_p);
    CHECK(m.relative_revenue >= 0.0);
    CHECK(m.relative_revenue <= 1.0);
    CHECK(m.stale_rate >= 0.0);
    CHECK(m.stale_rate <= 1.0);
    std::uint64_t total = 0;
    for (auto b : m.blocks_per_miner) total += b;
    CHECK(total == m.main_chain_blocks);
}

} // namespace

TEST_SUITE("simulator")
{
TEST_CASE("identical seeds give identical metrics")
{
    auto cfg = selfish(0.3, 10, 5);
    cfg.stop.finalized_blocks = 300;
    CHECK(run(cfg) == run(cfg));
    auto other = cfg;
    other.seed = 6;
    CHECK_FALSE(run(cfg) == run(other));
}

TEST_CASE("honest-only network has no attacker and no ties")
{
    ProtocolParams p;
    NetworkOptions net;
    net.alpha = 0.0;
    net.honest_miners = 8;
    auto cfg = make_config(p, Strategy::HonestOnly, net, 3);
    cfg.stop.finalized_blocks = 400;
    const auto m = run(cfg);
    CHECK(m.relative_revenue == 0.0);
    CHECK(m.ties_post.count == 0);
    CHECK(m.ties_pre.count == 0);
    CHECK(m.main_chain_blocks >= 400);
    check_invariants(m, cfg);
}

TEST_CASE("honest miners earn their hashrate share")
{
    ProtocolParams p;
    NetworkOptions net;
    net.honest_miners = 6;
    net.unequal_hashrates = true;
    auto cfg = make_config(p, Strategy::HonestOnly, net, 12);
    cfg.stop.finalized_blocks = 3000;
    const auto m = run(cfg);
    const double total = static_cast<double>(m.main_chain_blocks);
    for (const auto& miner : cfg.miners) {
        const double share = miner.hashrate_fraction;
        const double sigma = std::sqrt(share * (1 - share) / total);
        CHECK(std::abs(m.blocks_per_miner[miner.id] / total - share) <= 3 * sigma);
    }
}

TEST_CASE("extended selfish mining with s = 0 is selfish mining")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto sm = selfish(0.35, 10, seed);
        sm.stop.finalized_blocks = 300;
        auto esm = sm;
        esm.strategy = Strategy::ExtendedSelfishMining;
        esm.unresponsive_time = 0.0;
        const auto a = run_logged(sm);
        const auto b = run_logged(esm);
        CHECK(a.first == b.first);
        CHECK(a.second == b.second);
    }
}

TEST_CASE("lead one: an honest block meets a published tie at equal height")
{
    auto cfg = selfish(0.4, 10, 21);
    cfg.stop.post_ties = 40;
    const auto [m, text] = run_logged(cfg);
    const Replay r(text);
    int ties = 0;
    for (const auto& rec : r.records) {
        if (rec.kind != "TIE_POST") continue;
        ++ties;
        CHECK(rec.ids[0] != rec.ids[1]);
        CHECK(r.height.at(rec.ids[0]) == r.height.at(rec.ids[1]));
        CHECK(r.parent.at(rec.ids[0]) == r.parent.at(rec.ids[1]));
        CHECK(r.producer.at(rec.ids[0]) == 0);
        CHECK(r.producer.at(rec.ids[1]) != 0);
    }
    CHECK(ties >= 40);
    check_invariants(m, cfg);
}

TEST_CASE("lead two: the honest block is orphaned everywhere")
{
    auto cfg = selfish(0.45, 10, 4);
    cfg.stop.finalized_blocks = 1500;
    const auto [m, text] = run_logged(cfg);
    const Replay r(text);

    // final main chain of an honest miner
    std::string final_tip;
    for (const auto& rec : r.records)
        if (rec.kind == "MAIN_CHAIN" && rec.miner == 1) final_tip = rec.ids[0];
    REQUIRE_FALSE(final_tip.empty());

    std::string head = std::string(64, '0');
    int checked = 0;
    for (const auto& rec : r.records) {
        if (rec.kind == "BLOCK_GENERATED" && rec.miner == 0) head = rec.ids[0];
        if (rec.kind == "ATTACKER_ADOPT") head = rec.ids[0];
        if (rec.kind != "ATTACKER_SAW") continue;
        const auto hb = r.height.at(rec.ids[0]);
        if (r.height.at(head) != hb + 1) continue;
        // attacker was two ahead of the parent of this honest block
        if (r.height.at(final_tip) < hb + cfg.finality_depth) continue;
        CHECK_FALSE(r.extends(final_tip, rec.ids[0]));
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("no private block: the attacker adopts the honest head")
{
    auto cfg = selfish(0.3, 10, 8);
    cfg.stop.finalized_blocks = 500;
    const auto [m, text] = run_logged(cfg);
    const Replay r(text);
    std::string head = std::string(64, '0');
    int checked = 0;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        if (rec.kind == "BLOCK_GENERATED" && rec.miner == 0) head = rec.ids[0];
        if (rec.kind == "ATTACKER_ADOPT") head = rec.ids[0];
        if (rec.kind != "ATTACKER_SAW") continue;
        if (r.height.at(head) + 1 != r.height.at(rec.ids[0])) continue;
        REQUIRE(i + 1 < r.records.size());
        CHECK(r.records[i + 1].kind == "ATTACKER_ADOPT");
        CHECK(r.records[i + 1].ids[0] == rec.ids[0]);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("unresponsive period: pre ties inside the window, adoption on timeout")
{
    auto cfg = selfish(0.4, 10, 13, Strategy::ExtendedSelfishMining);
    cfg.unresponsive_time = 10.0; // equal to the acceptance window
    cfg.stop.pre_ties = 15;
    const auto [m, text] = run_logged(cfg);
    check_invariants(m, cfg);
    CHECK(m.ties_pre.count >= 15);

    // every honest miner kept both heads, so gamma' is decided by weight alone
    for (const auto& t : m.ties) {
        if (t.kind != TieKind::Pre) continue;
        for (const auto& c : t.choices) CHECK(c.both_kept);
    }

    const Replay r(text);
    int timeouts = 0;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        if (rec.kind == "TIE_PRE") {
            CHECK(r.height.at(rec.ids[0]) == r.height.at(rec.ids[1]));
        }
        if (rec.kind != "TIMEOUT") continue;
        ++timeouts;
        REQUIRE(i + 1 < r.records.size());
        CHECK(r.records[i + 1].kind == "ATTACKER_ADOPT");
        CHECK(r.records[i + 1].ids[0] == rec.ids[0]);
        // the timeout fires s after the attacker saw the block it ignored
        for (std::size_t j = i; j-- > 0;) {
            if (r.records[j].kind == "UNRESPONSIVE" && r.records[j].ids[0] == rec.ids[0]) {
                CHECK(rec.time - r.records[j].time == doctest::Approx(10.0).epsilon(1e-6));
                break;
            }
        }
    }
    CHECK(timeouts > 0);
}

TEST_CASE("measure_gamma examples")
{
    TieObservation all;
    all.choices = {{1, 0.25, true, true}, {2, 0.25, true, false}};
    CHECK(all.attacker_share() == 1.0);

    TieObservation split;
    split.choices = {{1, 0.3, true, true}, {2, 0.2, false, true}};
    CHECK(split.attacker_share() == doctest::Approx(0.6));

    // the attacker's head is poisoned, so every honest miner keeps its own block
    TieObservation poisoned;
    poisoned.choices = {{1, 0.1, false, true}, {2, 0.4, false, true}};
    const std::vector<TieObservation> one{poisoned};
    const auto g = measure_gamma(one);
    CHECK(g.post.mean == 0.0);
    CHECK(g.post.count == 1);
    CHECK(g.pre.count == 0);

    TieObservation pre = all;
    pre.kind = TieKind::Pre;
    const std::vector<TieObservation> mixed{split, all, pre};
    const auto gm = measure_gamma(mixed);
    CHECK(gm.post.count == 2);
    CHECK(gm.post.mean == doctest::Approx(0.8));
    CHECK(gm.post.sigma == doctest::Approx(std::sqrt(0.8 * 0.2 / 2)));
    CHECK(gm.post.ci_half_width == doctest::Approx(1.96 * gm.post.sigma));
    CHECK(gm.pre.mean == 1.0);

    CHECK_THROWS_AS(measure_gamma(std::vector<TieObservation>{}), EmptyLogError);
}

TEST_CASE("measured gamma respects the analytic bound")
{
    for (double delta : {10.0, 20.0}) {
        auto cfg = selfish(0.5, delta, 7);
        cfg.max_private_lead = 2;
        cfg.stop.post_ties = 1000;
        const auto m = run(cfg);
        analytic::GammaBoundInputs in;
        in.delta_b = in.delta_p = delta;
        const double bound = analytic::gamma_bound(in);
        CHECK(m.ties_post.count >= 1000);
        CHECK(m.ties_post.mean <= bound + 3 * m.ties_post.sigma);
        check_invariants(m, cfg);
    }
}

TEST_CASE("honest sufficiency checks starve the attacker's ties")
{
    ProtocolParams p;
    NetworkOptions net;
    net.alpha = 0.5;
    net.honest_miners = 20;
    net.honest_sufficiency_check = true;
    auto cfg = make_config(p, Strategy::SelfishMining, net, 9);
    cfg.max_private_lead = 2;
    cfg.stop.post_ties = 1000;
    const auto m = run(cfg);
    check_invariants(m, cfg);

    net.honest_sufficiency_check = false;
    auto open = make_config(p, Strategy::SelfishMining, net, 9);
    open.max_private_lead = 2;
    open.stop.post_ties = 1000;
    const auto baseline = run(open);
    MESSAGE("gamma with checks " << m.ties_post.mean << ", without " << baseline.ties_post.mean);
    CHECK(m.ties_post.mean < baseline.ties_post.mean);
}

TEST_CASE("drifting clocks keep every invariant")
{
    ProtocolParams p;
    p.D = 0.1;
    NetworkOptions net;
    net.alpha = 0.3;
    net.honest_miners = 15;
    net.random_drift = true;
    auto cfg = make_config(p, Strategy::ExtendedSelfishMining, net, 17);
    cfg.unresponsive_time = 20;
    cfg.stop.finalized_blocks = 500;
    bool drifted = false;
    for (const auto& m : cfg.miners) drifted |= m.drift != 0.0;
    CHECK(drifted);
    check_invariants(run(cfg), cfg);
}

TEST_CASE("variable difficulty adjusters run cleanly")
{
    ProtocolParams p;
    p.mode = AdjusterMode::Variable;
    NetworkOptions net;
    net.alpha = 0.3;
    net.honest_miners = 8;
    auto cfg = make_config(p, Strategy::SelfishMining, net, 2);
    for (auto& m : cfg.miners) m.adjuster = 50u * (1 + m.id % 4);
    cfg.stop.finalized_blocks = 300;
    check_invariants(run(cfg), cfg);
}

TEST_CASE("configuration is validated")
{
    auto ok = selfish(0.3, 10, 1);
    ok.stop.finalized_blocks = 10;
    CHECK_NOTHROW(ok.validate());

    auto c = ok;
    c.miners[1].hashrate_fraction += 0.1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = ok;
    c.miners[1].role = Role::Attacker;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = ok;
    c.unresponsive_time = 5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = ok;
    c.stop = {};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = ok;
    c.miners[2].drift = 0.05;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = ok;
    c.topology = nullptr;
    CHECK_THROWS_AS(run(c), std::invalid_argument);

    CHECK(parse_strategy("esm") == Strategy::ExtendedSelfishMining);
    CHECK(std::string(to_string(Strategy::HonestOnly)) == "honest");
    CHECK_THROWS_AS(parse_strategy("stubborn"), std::invalid_argument);
}

TEST_CASE("uniform topology honours its bounds and the instant attacker")
{
    UniformTopology t(10, 20, 99, MinerId{0});
    for (std::uint64_t msg = 0; msg < 2000; ++msg) {
        const auto from = static_cast<MinerId>(1 + msg % 7);
        const auto to = static_cast<MinerId>(1 + (msg / 7) % 7);
        if (from == to) continue;
        const double b = t.delay(from, to, MessageKind::Block, msg);
        const double p = t.delay(from, to, MessageKind::PartialPow, msg);
        CHECK(b >= 2.0);
        CHECK(b < 9.0);
        CHECK(p >= 4.0);
        CHECK(p < 18.0);
        CHECK(t.delay(0, to, MessageKind::Block, msg) == 0.0);
        CHECK(t.delay(from, 0, MessageKind::PartialPow, msg) == 0.0);
        CHECK(b == t.delay(from, to, MessageKind::Block, msg));
    }
}

TEST_CASE("latency matrix files")
{
    const std::string path = "latency_matrix_test.txt";
    {
        std::ofstream f(path);
        f << "# from to block pow\n0 1 1.5 2.5\n1 0 3 4 # trailing comment\n";
    }
    auto fallback = std::make_shared<UniformTopology>(10, 10, 1);
    const auto m = MatrixTopology::load(path, 10, 10, 3, fallback);
    CHECK(m->delay(0, 1, MessageKind::Block, 7) == 1.5);
    CHECK(m->delay(0, 1, MessageKind::PartialPow, 7) == 2.5);
    CHECK(m->delay(1, 0, MessageKind::Block, 7) == 3.0);
    CHECK(m->delay(1, 2, MessageKind::Block, 7) == fallback->delay(1, 2, MessageKind::Block, 7));
    {
        std::ofstream f(path);
        f << "0 1 oops 2\n";
    }
    CHECK_THROWS(MatrixTopology::load(path, 10, 10, 3, fallback));
    std::remove(path.c_str());
}
}
