// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/experiment.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef PPOW_VERSION
#define PPOW_VERSION "unknown"
#endif

namespace ppow::experiment {

namespace {

struct Axis {
    const char* name;
    std::size_t size;
    std::function<void(Point&, std::size_t)> set;
};

// Outermost first; the figure's x axis sits innermost so rows read as curves.
std::vector<Axis> all_axes(const ExperimentSpec& spec)
{
    const Grid& g = spec.grid;
    std::vector<Axis> axes;
    if (g.paired_delta) {
        axes.push_back({"delta", g.delta_b.size(), [&g](Point& p, std::size_t i) {
                            p.delta_b = g.delta_b[i];
                            p.delta_p = g.delta_b[i];
                        }});
    } else {
        axes.push_back({"delta_b", g.delta_b.size(), [&g](Point& p, std::size_t i) { p.delta_b = g.delta_b[i]; }});
        axes.push_back({"delta_p", g.delta_p.size(), [&g](Point& p, std::size_t i) { p.delta_p = g.delta_p[i]; }});
    }
    axes.push_back({"T", g.T.size(), [&g](Point& p, std::size_t i) { p.T = g.T[i]; }});
    axes.push_back({"D", g.D.size(), [&g](Point& p, std::size_t i) { p.D = g.D[i]; }});
    axes.push_back({"s", g.s.size(), [&g](Point& p, std::size_t i) { p.s = g.s[i]; }});
    axes.push_back({"gamma_prime", g.gamma_prime.size(), [&g](Point& p, std::size_t i) { p.gamma_prime = g.gamma_prime[i]; }});
    axes.push_back({"alpha", g.alpha.size(), [&g](Point& p, std::size_t i) { p.alpha = g.alpha[i]; }});
    axes.push_back({"n", g.n.size(), [&g](Point& p, std::size_t i) { p.n = static_cast<std::uint32_t>(g.n[i]); }});
    axes.push_back({"ratio", g.ratio.size(), [&g](Point& p, std::size_t i) { p.ratio = g.ratio[i]; }});
    axes.push_back({"seed", spec.seeds.size(), [&spec](Point& p, std::size_t i) { p.seed = spec.seeds[i]; }});
    return axes;
}

bool axis_used(Kind kind, const std::string& axis)
{
    if (axis == "n" || axis == "T" || axis == "D") return true;
    if (axis == "alpha") return kind != Kind::Threshold;
    if (axis == "ratio") return kind == Kind::GammaVsRatio;
    if (axis == "delta" || axis == "delta_b" || axis == "delta_p") return kind != Kind::GammaVsRatio;
    if (axis == "s") return kind == Kind::RevenueVsAlpha || kind == Kind::Threshold || is_simulation(kind);
    if (axis == "gamma_prime") return kind == Kind::RevenueVsAlpha || kind == Kind::Threshold || is_simulation(kind);
    if (axis == "seed") return is_simulation(kind);
    return false;
}

const char* mode_name(analytic::ThresholdMode m)
{
    switch (m) {
    case analytic::ThresholdMode::Proposed: return "proposed";
    case analytic::ThresholdMode::RandomRule: return "random";
    case analytic::ThresholdMode::ConstantGamma: return "constant";
    }
    return "?";
}

analytic::GammaBoundInputs bound_inputs(const Point& p)
{
    analytic::GammaBoundInputs in;
    in.n = p.n;
    in.alpha = p.alpha;
    in.delta_b = p.delta_b;
    in.delta_p = p.delta_p;
    in.T = p.T;
    in.D = p.D;
    return in;
}

std::uint32_t lead_cap(const ExperimentSpec& spec)
{
    if (spec.max_private_lead) return *spec.max_private_lead;
    return spec.kind == Kind::SimGamma ? 2u : 0u;
}

std::uint64_t stop_target(const ExperimentSpec& spec)
{
    return spec.kind == Kind::SimGamma ? spec.post_ties : spec.finalized_blocks;
}

std::vector<std::string> header_for(Kind kind)
{
    switch (kind) {
    case Kind::GammaVsN:
        return {"n", "alpha", "delta_b", "delta_p", "T", "D", "gamma_bound", "lemma1", "lemma2"};
    case Kind::GammaVsRatio:
        return {"n", "alpha", "ratio", "delta_b", "delta_p", "T", "D", "gamma_bound", "lemma1", "lemma2"};
    case Kind::RevenueVsAlpha:
        return {"n", "alpha", "delta_b", "delta_p", "T", "D", "s", "gamma_prime",
                "gamma_bound", "o", "R_sm", "R_esm", "R_random"};
    case Kind::Threshold:
        return {"n", "delta_b", "delta_p", "T", "D", "s", "gamma_prime", "mode", "constant_gamma", "threshold"};
    case Kind::SimGamma:
    case Kind::SimRevenue:
        return {"n", "alpha", "delta_b", "delta_p", "T", "D", "s", "gamma_prime", "strategy", "honest_miners",
                "max_private_lead", "honest_sufficiency_check", "attacker_zero_delay", "random_drift", "stop", "seed",
                "gamma_bound", "sim_gamma", "ci_low", "ci_high", "ties_post", "sim_gamma_pre", "ties_pre",
                "relative_revenue", "R_esm", "main_chain_blocks", "stale_rate", "t_w_blocks", "t_w_pows"};
    }
    return {};
}

using Row = std::vector<std::string>;

std::string fmt(double v) { return format_number(v); }
std::string fmt_u(std::uint64_t v) { return std::to_string(v); }

// Attacker revenue with gamma tied to the defender's worst case.
double revenue(const Point& p, double o, double gamma, double gamma_prime)
{
    analytic::EsmInputs in;
    in.alpha = p.alpha;
    in.gamma = gamma;
    in.gamma_prime = gamma_prime;
    in.unresponsive = analytic::TieProbability{o};
    in.T = p.T;
    return analytic::esm_relative_revenue(in);
}

Row evaluate_point(const ExperimentSpec& spec, const Point& p, std::string& summary)
{
    const auto in = bound_inputs(p);
    std::ostringstream line;
    line << to_string(spec.kind);
    switch (spec.kind) {
    case Kind::GammaVsN:
    case Kind::GammaVsRatio: {
        const double g = analytic::gamma_bound(in);
        const double l1 = analytic::gamma_bound_lemma1(in);
        const double l2 = analytic::gamma_bound_lemma2(in);
        line << " n=" << p.n << " alpha=" << fmt(p.alpha) << " delta_b=" << fmt(p.delta_b) << " gamma_bound=" << fmt(g);
        summary = line.str();
        Row row{fmt_u(p.n), fmt(p.alpha)};
        if (spec.kind == Kind::GammaVsRatio) row.push_back(fmt(p.ratio));
        for (double v : {p.delta_b, p.delta_p, p.T, p.D, g, l1, l2}) row.push_back(fmt(v));
        return row;
    }
    case Kind::RevenueVsAlpha: {
        const double g = analytic::gamma_bound(in);
        const double o = analytic::unresponsive_probability(p.s, p.T);
        const double r_sm = revenue(p, 0.0, g, p.gamma_prime);
        const double r_esm = revenue(p, o, g, p.gamma_prime);
        const double r_rand = revenue(p, 0.0, 0.5, 0.5);
        line << " alpha=" << fmt(p.alpha) << " delta_b=" << fmt(p.delta_b) << " s=" << fmt(p.s)
             << " R_sm=" << fmt(r_sm) << " R_esm=" << fmt(r_esm);
        summary = line.str();
        Row row{fmt_u(p.n)};
        for (double v : {p.alpha, p.delta_b, p.delta_p, p.T, p.D, p.s, p.gamma_prime, g, o, r_sm, r_esm, r_rand})
            row.push_back(fmt(v));
        return row;
    }
    case Kind::Threshold: {
        analytic::ThresholdQuery q;
        q.protocol = in;
        q.s = p.s;
        q.gamma_prime = p.gamma_prime;
        q.mode = spec.threshold_mode;
        q.constant_gamma = spec.constant_gamma;
        const double a = analytic::sm_threshold(q).alpha;
        line << " delta_b=" << fmt(p.delta_b) << " s=" << fmt(p.s) << " mode=" << mode_name(spec.threshold_mode)
             << " threshold=" << fmt(a);
        summary = line.str();
        Row row{fmt_u(p.n)};
        for (double v : {p.delta_b, p.delta_p, p.T, p.D, p.s, p.gamma_prime}) row.push_back(fmt(v));
        row.push_back(mode_name(spec.threshold_mode));
        row.push_back(fmt(spec.constant_gamma));
        row.push_back(fmt(a));
        return row;
    }
    case Kind::SimGamma:
    case Kind::SimRevenue: {
        std::unique_ptr<std::ofstream> log;
        auto cfg = make_sim_config(spec, p);
        if (!spec.event_log.empty()) {
            log = std::make_unique<std::ofstream>(spec.event_log);
            if (!*log) throw std::runtime_error("cannot write event log '" + spec.event_log + "'");
            cfg.event_log = log.get();
        }
        const auto m = sim::run(cfg);
        const double g = analytic::gamma_bound(in);
        const double o = analytic::unresponsive_probability(p.s, p.T);
        const double r_esm = p.alpha <= 0.5 ? revenue(p, o, g, p.gamma_prime) : std::nan("");
        const double lo = std::max(0.0, m.ties_post.mean - m.ties_post.ci_half_width);
        const double hi = std::min(1.0, m.ties_post.mean + m.ties_post.ci_half_width);
        line << " alpha=" << fmt(p.alpha) << " delta_b=" << fmt(p.delta_b) << " seed=" << p.seed
             << " ties=" << m.ties_post.count << " sim_gamma=" << fmt(m.ties_post.mean) << " bound=" << fmt(g)
             << " revenue=" << fmt(m.relative_revenue);
        summary = line.str();
        Row row{fmt_u(p.n)};
        for (double v : {p.alpha, p.delta_b, p.delta_p, p.T, p.D, p.s, p.gamma_prime}) row.push_back(fmt(v));
        row.push_back(sim::to_string(spec.strategy));
        row.push_back(fmt_u(spec.honest_miners));
        row.push_back(fmt_u(lead_cap(spec)));
        row.push_back(spec.honest_sufficiency_check ? "1" : "0");
        row.push_back(spec.attacker_zero_delay ? "1" : "0");
        row.push_back(spec.random_drift ? "1" : "0");
        row.push_back(fmt_u(stop_target(spec)));
        row.push_back(fmt_u(p.seed));
        for (double v : {g, m.ties_post.mean, lo, hi}) row.push_back(fmt(v));
        row.push_back(fmt_u(m.ties_post.count));
        row.push_back(fmt(m.ties_pre.mean));
        row.push_back(fmt_u(m.ties_pre.count));
        row.push_back(fmt(m.relative_revenue));
        row.push_back(fmt(r_esm));
        row.push_back(fmt_u(m.main_chain_blocks));
        for (double v : {m.stale_rate, m.t_w_blocks, m.t_w_pows}) row.push_back(fmt(v));
        return row;
    }
    }
    return {};
}

std::string iso_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void validate(const ExperimentSpec& spec)
{
    const auto axes = all_axes(spec);
    for (const auto& axis : axes) {
        const bool used = axis_used(spec.kind, axis.name);
        if (used && axis.size == 0) {
            if (std::string(axis.name) == "seed") throw ConfigError("simulation experiments need at least one seed");
            throw ConfigError(std::string("empty grid for '") + axis.name + "'");
        }
        if (!used && axis.size > 1)
            throw ConfigError(std::string("'") + axis.name + "' is not swept by kind " + to_string(spec.kind));
    }
    if (spec.zip) {
        std::size_t len = 1;
        for (const auto& axis : axes) {
            if (!axis_used(spec.kind, axis.name) || axis.size == 1) continue;
            if (len != 1 && axis.size != len)
                throw ConfigError("combine=zip needs every swept list to have the same length");
            len = axis.size;
        }
    }
    for (double n : spec.grid.n)
        if (!(n >= 1.0) || n != std::floor(n) || n > 1e9) throw ConfigError("n must be a positive integer");
    if (spec.kind == Kind::RevenueVsAlpha || is_simulation(spec.kind))
        for (double a : spec.grid.alpha)
            if (!(a >= 0.0 && a <= 0.5)) throw ConfigError("alpha must lie in [0, 0.5] for revenue and simulation");
    if (is_simulation(spec.kind) && !spec.event_log.empty() && expand(spec).size() != 1)
        throw ConfigError("event_log needs a single-point simulation");

    // domain checks per point, reported as config errors
    for (const auto& p : expand(spec)) {
        try {
            bound_inputs(p).validate();
            analytic::unresponsive_probability(p.s, p.T);
            if (!(p.gamma_prime >= 0.0 && p.gamma_prime <= 1.0)) throw std::invalid_argument("gamma_prime must lie in [0, 1]");
            if (spec.kind == Kind::GammaVsRatio && !(p.ratio >= 0.0)) throw std::invalid_argument("ratio must be non-negative");
            if (is_simulation(spec.kind)) make_sim_config(spec, p).validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
}

std::vector<Point> expand(const ExperimentSpec& spec)
{
    std::vector<Axis> axes;
    for (auto& a : all_axes(spec))
        if (axis_used(spec.kind, a.name)) axes.push_back(std::move(a));

    Point base;
    // unswept axes keep their single value
    for (auto& a : all_axes(spec))
        if (!axis_used(spec.kind, a.name) && a.size > 0) a.set(base, 0);

    std::vector<Point> out;
    for (const auto& a : axes)
        if (a.size == 0) return out;

    if (spec.zip) {
        std::size_t len = 1;
        for (const auto& a : axes) len = std::max(len, a.size);
        for (std::size_t i = 0; i < len; ++i) {
            Point p = base;
            for (const auto& a : axes) a.set(p, a.size == 1 ? 0 : std::min(i, a.size - 1));
            out.push_back(p);
        }
    } else {
        // odometer over the axes, last axis fastest
        std::vector<std::size_t> idx(axes.size(), 0);
        bool done = false;
        while (!done) {
            Point p = base;
            for (std::size_t k = 0; k < axes.size(); ++k) axes[k].set(p, idx[k]);
            out.push_back(p);
            done = true;
            for (std::size_t k = axes.size(); k-- > 0;) {
                if (++idx[k] < axes[k].size) {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    if (spec.kind == Kind::GammaVsRatio)
        for (auto& p : out) p.delta_b = p.delta_p = p.ratio * p.T / 4.0;
    return out;
}

sim::SimConfig make_sim_config(const ExperimentSpec& spec, const Point& p)
{
    ProtocolParams params;
    params.T = p.T;
    params.n = p.n;
    params.delta_b = p.delta_b;
    params.delta_p = p.delta_p;
    params.D = p.D;
    params.validate();

    sim::NetworkOptions net;
    net.alpha = p.alpha;
    net.honest_miners = spec.honest_miners;
    net.attacker_zero_delay = spec.attacker_zero_delay;
    net.honest_sufficiency_check = spec.honest_sufficiency_check;
    net.random_drift = spec.random_drift;

    auto cfg = sim::make_config(params, spec.strategy, net, p.seed);
    cfg.unresponsive_time = p.s;
    cfg.max_private_lead = lead_cap(spec);
    if (spec.kind == Kind::SimGamma) cfg.stop.post_ties = spec.post_ties;
    else cfg.stop.finalized_blocks = spec.finalized_blocks;
    cfg.stop.max_time = spec.max_time;
    return cfg;
}

Table evaluate(const ExperimentSpec& spec, std::ostream* progress)
{
    validate(spec);
    const auto points = expand(spec);

    Table table;
    table.header = header_for(spec.kind);
    table.rows.resize(points.size());
    table.runtime_s.resize(points.size());
    std::vector<std::string> summaries(points.size());

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                const auto start = std::chrono::steady_clock::now();
                table.rows[i] = evaluate_point(spec, points[i], summaries[i]);
                table.runtime_s[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                if (progress) {
                    std::lock_guard lock(mu);
                    *progress << "[" << (i + 1) << "/" << points.size() << "] " << summaries[i] << '\n';
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = points.size();
            }
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(points.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return table;
}

std::string to_csv(const Table& table)
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
    return out;
}

Table run_experiment(const ExperimentSpec& spec, std::ostream* progress)
{
    if (spec.out.empty()) throw ConfigError("no output path given");
    const auto start = std::chrono::steady_clock::now();
    Table table = evaluate(spec, progress);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    {
        std::ofstream csv(spec.out, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write '" + spec.out + "'");
        csv << to_csv(table);
        if (!csv.flush()) throw std::runtime_error("write failed for '" + spec.out + "'");
    }

    nlohmann::json meta;
    meta["version"] = PPOW_VERSION;
    meta["generated_at"] = iso_now();
    meta["kind"] = to_string(spec.kind);
    meta["csv"] = spec.out;
    meta["rows"] = table.rows.size();
    meta["jobs"] = spec.jobs;
    meta["seeds"] = spec.seeds;
    meta["combine"] = spec.zip ? "zip" : "product";
    const auto& g = spec.grid;
    meta["grid"] = {{"n", g.n}, {"alpha", g.alpha}, {"delta_b", g.delta_b}, {"delta_p", g.delta_p},
                    {"paired_delta", g.paired_delta}, {"T", g.T}, {"D", g.D}, {"s", g.s},
                    {"gamma_prime", g.gamma_prime}, {"ratio", g.ratio}};
    if (spec.kind == Kind::Threshold) {
        meta["mode"] = mode_name(spec.threshold_mode);
        meta["constant_gamma"] = spec.constant_gamma;
    }
    if (is_simulation(spec.kind)) {
        meta["strategy"] = sim::to_string(spec.strategy);
        meta["honest_miners"] = spec.honest_miners;
        meta["stop"] = stop_target(spec);
        meta["max_private_lead"] = lead_cap(spec);
        meta["max_time"] = spec.max_time;
    }
    meta["runtime_s"] = table.runtime_s;
    meta["total_runtime_s"] = total;

    const std::string meta_path = spec.out + ".meta.json";
    std::ofstream js(meta_path);
    if (!js) throw std::runtime_error("cannot write '" + meta_path + "'");
    js << meta.dump(2) << '\n';
    return table;
}

} // namespace ppow::experiment
