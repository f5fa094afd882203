// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

// ppowlab: batch driver for the analytic curves and the network simulator.
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <ppow/experiment.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace {

using namespace ppow;
using experiment::ConfigError;
using experiment::ExperimentSpec;
using experiment::Kind;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct Flags {
    std::optional<std::string> config;
    std::vector<std::string> sets;
    // explicit parameter flags, applied after --set in this order
    std::vector<std::pair<const char*, std::optional<std::string>>> named{
        {"n", {}}, {"alpha", {}}, {"delta", {}}, {"delta_b", {}}, {"delta_p", {}}, {"T", {}}, {"D", {}},
        {"s", {}}, {"gamma_prime", {}}, {"ratio", {}}, {"mode", {}}, {"constant_gamma", {}},
        {"strategy", {}}, {"honest_miners", {}}, {"post_ties", {}}, {"finalized_blocks", {}},
        {"max_private_lead", {}}, {"seed", {}}, {"out", {}}, {"jobs", {}}, {"event_log", {}},
    };

    std::optional<std::string>& slot(const char* key)
    {
        for (auto& [k, v] : named)
            if (std::string(k) == key) return v;
        throw std::logic_error("unknown flag slot");
    }

    std::vector<std::pair<std::string, std::string>> overrides() const
    {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
            out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [k, v] : named)
            if (v) out.emplace_back(k, *v);
        return out;
    }
};

void add_common(CLI::App* cmd, Flags& f, bool simulation)
{
    cmd->add_option("--config", f.config, "key=value configuration file (flags override it)");
    cmd->add_option("--set", f.sets, "extra key=value override, repeatable");
    cmd->add_option("--out", f.slot("out"), "CSV output path; metadata goes to <out>.meta.json");
    cmd->add_option("--jobs", f.slot("jobs"), "worker threads");
    cmd->add_option("--n", f.slot("n"), "difficulty adjuster(s)");
    cmd->add_option("--alpha", f.slot("alpha"), "attacker hashrate share(s)");
    cmd->add_option("--delta", f.slot("delta"), "delta_b = delta_p (s)");
    cmd->add_option("--delta-b", f.slot("delta_b"), "block propagation bound (s)");
    cmd->add_option("--delta-p", f.slot("delta_p"), "partial-PoW propagation bound (s)");
    cmd->add_option("--T", f.slot("T"), "mean block interval (s)");
    cmd->add_option("--D", f.slot("D"), "clock drift bound");
    cmd->add_option("--s", f.slot("s"), "unresponsive time (s)");
    cmd->add_option("--gamma-prime", f.slot("gamma_prime"), "gamma' for pre-generated ties");
    if (simulation) {
        cmd->add_option("--seed", f.slot("seed"), "seed list, e.g. 1,2,3 or 1:10");
        cmd->add_option("--strategy", f.slot("strategy"), "honest | sm | esm");
        cmd->add_option("--honest-miners", f.slot("honest_miners"), "number of honest miners");
        cmd->add_option("--post-ties", f.slot("post_ties"), "stop after this many post-generated ties (gamma runs)");
        cmd->add_option("--blocks", f.slot("finalized_blocks"), "stop after this many finalized blocks (revenue runs)");
        cmd->add_option("--max-private-lead", f.slot("max_private_lead"), "publish the private chain at this lead");
    }
}

int execute(const ExperimentSpec& base, const Flags& flags, bool single_point)
{
    ExperimentSpec spec = experiment::parse_config(flags.config, flags.overrides(), base);
    experiment::validate(spec);
    if (single_point && experiment::expand(spec).size() != 1)
        throw ConfigError("sim run takes a single parameter point; use sim sweep for grids");

    if (spec.out.empty()) {
        const auto table = experiment::evaluate(spec, &std::cerr);
        std::cout << experiment::to_csv(table);
    } else {
        experiment::run_experiment(spec, &std::cout);
        std::cout << "wrote " << spec.out << " and " << spec.out << ".meta.json\n";
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ppowlab: partial-PoW fork-choice analysis and simulation"};
    app.require_subcommand(1);

    Flags flags;
    ExperimentSpec base;
    base.jobs = std::max(1u, std::thread::hardware_concurrency());
    bool single_point = false;
    std::string preset_name;
    std::string sim_metric = "gamma";

    auto* analytic = app.add_subcommand("analytic", "closed-form curves");
    analytic->require_subcommand(1);
    auto* a_gamma = analytic->add_subcommand("gamma", "gamma bound over n (or over --ratio)");
    auto* a_revenue = analytic->add_subcommand("revenue", "attacker relative revenue over alpha");
    auto* a_threshold = analytic->add_subcommand("threshold", "profitability threshold of selfish mining");
    for (auto* c : {a_gamma, a_revenue, a_threshold}) add_common(c, flags, false);
    a_gamma->add_option("--ratio", flags.slot("ratio"), "(2 delta_b + 2 delta_p) / T values; switches to gamma-vs-ratio");
    a_threshold->add_option("--mode", flags.slot("mode"), "proposed | random | constant");
    a_threshold->add_option("--constant-gamma", flags.slot("constant_gamma"), "gamma used by --mode constant");

    auto* sim = app.add_subcommand("sim", "network simulation");
    sim->require_subcommand(1);
    auto* s_run = sim->add_subcommand("run", "one seeded run");
    auto* s_sweep = sim->add_subcommand("sweep", "grid of seeded runs");
    for (auto* c : {s_run, s_sweep}) {
        add_common(c, flags, true);
        c->add_option("--metric", sim_metric, "gamma (stop on ties) | revenue (stop on finalized blocks)")
            ->check(CLI::IsMember({"gamma", "revenue"}));
    }
    s_run->add_option("--event-log", flags.slot("event_log"), "write the line-delimited event log here");

    auto* pre = app.add_subcommand("preset", "named figure grid");
    pre->add_option("name", preset_name, "fig4 fig5 fig6 fig7 fig9 fig10 fig11 thresholds sim-gamma")->required();
    add_common(pre, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (a_gamma->parsed()) base.kind = !flags.slot("ratio") ? Kind::GammaVsN : Kind::GammaVsRatio;
        else if (a_revenue->parsed()) {
            base.kind = Kind::RevenueVsAlpha;
            experiment::apply_setting(base, "alpha", "0:0.5:0.01");
        } else if (a_threshold->parsed()) base.kind = Kind::Threshold;
        else if (s_run->parsed() || s_sweep->parsed()) {
            base.kind = sim_metric == "gamma" ? Kind::SimGamma : Kind::SimRevenue;
            base.seeds = {1};
            single_point = s_run->parsed();
        } else if (pre->parsed()) {
            const unsigned jobs = base.jobs;
            base = experiment::preset(preset_name);
            base.jobs = jobs;
        }
        if (base.kind == Kind::GammaVsN && !flags.slot("n")) experiment::apply_setting(base, "n", "2:100");
        return execute(base, flags, single_point);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}
