// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/experiment.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ppow::experiment {

namespace {

const std::pair<Kind, const char*> kind_names[] = {
    {Kind::GammaVsN, "gamma-vs-n"},
    {Kind::GammaVsRatio, "gamma-vs-ratio"},
    {Kind::RevenueVsAlpha, "revenue-vs-alpha"},
    {Kind::Threshold, "threshold"},
    {Kind::SimGamma, "sim-gamma"},
    {Kind::SimRevenue, "sim-revenue"},
};

double parse_double(const std::string& text)
{
    // from_chars for double is available in libstdc++ 11
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ConfigError("not a number: '" + text + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& text)
{
    std::uint64_t v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw ConfigError("not a non-negative integer: '" + text + "'");
    return v;
}

bool parse_bool(const std::string& text)
{
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw ConfigError("not a boolean: '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    if (text.empty()) return out;  // an explicit empty grid, rejected later by validate
    for (const auto& item : split(text, ',')) {
        auto range = split(item, ':');
        if (range.size() == 1) {
            out.push_back(parse_double(item));
            continue;
        }
        if (range.size() > 3) throw ConfigError("bad range '" + item + "', expected a:b[:step]");
        const double lo = parse_double(range[0]);
        const double hi = parse_double(range[1]);
        const double step = range.size() == 3 ? parse_double(range[2]) : 1.0;
        if (!(step > 0.0)) throw ConfigError("range step must be positive in '" + item + "'");
        if (hi < lo) throw ConfigError("range end below start in '" + item + "'");
        // index-based so accumulated rounding never drops the end point
        const auto count = static_cast<std::uint64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        if (count > 1'000'000) throw ConfigError("range '" + item + "' is too long");
        for (std::uint64_t k = 0; k < count; ++k) out.push_back(lo + step * static_cast<double>(k));
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> out;
    if (text.empty()) return out;
    for (const auto& item : split(text, ',')) {
        auto range = split(item, ':');
        if (range.size() == 1) {
            out.push_back(parse_unsigned(item));
        } else if (range.size() == 2) {
            const auto lo = parse_unsigned(range[0]);
            const auto hi = parse_unsigned(range[1]);
            if (hi < lo || hi - lo >= 1'000'000) throw ConfigError("bad seed range '" + item + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        } else {
            throw ConfigError("bad seed range '" + item + "'");
        }
    }
    return out;
}

analytic::ThresholdMode parse_mode(const std::string& text)
{
    if (text == "proposed") return analytic::ThresholdMode::Proposed;
    if (text == "random") return analytic::ThresholdMode::RandomRule;
    if (text == "constant") return analytic::ThresholdMode::ConstantGamma;
    throw ConfigError("unknown threshold mode '" + text + "' (proposed, random, constant)");
}

std::string trim_comment(const std::string& line)
{
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

} // namespace

const char* to_string(Kind k)
{
    for (const auto& [kind, name] : kind_names)
        if (kind == k) return name;
    return "?";
}

Kind parse_kind(const std::string& text)
{
    for (const auto& [kind, name] : kind_names)
        if (text == name) return kind;
    throw ConfigError("unknown experiment kind '" + text + "'");
}

bool is_simulation(Kind k)
{
    return k == Kind::SimGamma || k == Kind::SimRevenue;
}

void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value)
{
    auto& g = spec.grid;
    if (key == "kind") spec.kind = parse_kind(value);
    else if (key == "n") g.n = parse_list(value);
    else if (key == "alpha") g.alpha = parse_list(value);
    else if (key == "delta") {
        g.delta_b = parse_list(value);
        g.delta_p = g.delta_b;
        g.paired_delta = true;
    } else if (key == "delta_b") {
        g.delta_b = parse_list(value);
        g.paired_delta = false;
    } else if (key == "delta_p") {
        g.delta_p = parse_list(value);
        g.paired_delta = false;
    } else if (key == "T") g.T = parse_list(value);
    else if (key == "D") g.D = parse_list(value);
    else if (key == "s") g.s = parse_list(value);
    else if (key == "gamma_prime") g.gamma_prime = parse_list(value);
    else if (key == "ratio") g.ratio = parse_list(value);
    else if (key == "combine") {
        if (value == "product") spec.zip = false;
        else if (value == "zip") spec.zip = true;
        else throw ConfigError("combine must be 'product' or 'zip'");
    } else if (key == "mode") spec.threshold_mode = parse_mode(value);
    else if (key == "constant_gamma") spec.constant_gamma = parse_double(value);
    else if (key == "seed" || key == "seeds") spec.seeds = parse_seeds(value);
    else if (key == "strategy") {
        try {
            spec.strategy = sim::parse_strategy(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "honest_miners") spec.honest_miners = parse_unsigned(value);
    else if (key == "post_ties") spec.post_ties = parse_unsigned(value);
    else if (key == "finalized_blocks") spec.finalized_blocks = parse_unsigned(value);
    else if (key == "max_private_lead") spec.max_private_lead = static_cast<std::uint32_t>(parse_unsigned(value));
    else if (key == "max_time") spec.max_time = parse_double(value);
    else if (key == "honest_sufficiency_check") spec.honest_sufficiency_check = parse_bool(value);
    else if (key == "attacker_zero_delay") spec.attacker_zero_delay = parse_bool(value);
    else if (key == "random_drift") spec.random_drift = parse_bool(value);
    else if (key == "event_log") spec.event_log = value;
    else if (key == "out") spec.out = value;
    else if (key == "jobs") {
        const auto j = parse_unsigned(value);
        if (j == 0 || j > 1024) throw ConfigError("jobs must lie in [1, 1024]");
        spec.jobs = static_cast<unsigned>(j);
    } else throw ConfigError("unknown key '" + key + "'");
}

void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::istringstream tokens(trim_comment(line));
        std::string token;
        while (tokens >> token) {
            const auto eq = token.find('=');
            try {
                if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + token + "'");
                apply_setting(spec, token.substr(0, eq), token.substr(eq + 1));
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
            }
        }
    }
}

void apply_config_file(ExperimentSpec& spec, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_text(spec, text.str(), path);
}

ExperimentSpec parse_config(const std::optional<std::string>& path,
                            const std::vector<std::pair<std::string, std::string>>& flags, ExperimentSpec base)
{
    if (path) apply_config_file(base, *path);
    for (const auto& [key, value] : flags) {
        try {
            apply_setting(base, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("--" + key + ": " + e.what());
        }
    }
    return base;
}

std::vector<std::string> preset_names()
{
    return {"fig4", "fig5", "fig6", "fig7", "fig9", "fig10", "fig11", "thresholds", "sim-gamma"};
}

ExperimentSpec preset(const std::string& name)
{
    ExperimentSpec spec;
    auto set = [&spec](const char* text) { apply_config_text(spec, text, "preset"); };
    if (name == "fig4") {
        set("kind=gamma-vs-n n=2:100 alpha=0.5 delta=10 T=600");
    } else if (name == "fig5") {
        set("kind=gamma-vs-n n=2:100 alpha=0.5 delta=20 T=600");
    } else if (name == "fig6") {
        // one curve per attacker share; T=150 with delta=10 gives the Litecoin point 0.267
        set("kind=gamma-vs-ratio n=50 alpha=0.1:0.5:0.1 ratio=0:0.4:0.005 T=600");
    } else if (name == "fig7") {
        set("kind=revenue-vs-alpha n=50 alpha=0:0.5:0.005 delta=10,20 T=600 s=0");
    } else if (name == "fig9") {
        set("kind=revenue-vs-alpha n=50 alpha=0:0.5:0.005 delta=10 T=600 s=20 gamma_prime=1");
    } else if (name == "fig10") {
        set("kind=revenue-vs-alpha n=50 alpha=0:0.5:0.005 delta=20 T=600 s=40 gamma_prime=1");
    } else if (name == "fig11") {
        set("kind=revenue-vs-alpha n=50 alpha=0:0.5:0.005 delta=10 T=600 s=420 gamma_prime=1");
    } else if (name == "thresholds") {
        set("kind=threshold combine=zip n=50 T=600 delta=10,20,10,20,10 s=0,0,20,40,420 gamma_prime=1");
    } else if (name == "sim-gamma") {
        set("kind=sim-gamma n=50 alpha=0.5 delta=10,20 T=600 strategy=sm seeds=1 post_ties=1000");
    } else {
        std::string known;
        for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    spec.out = name + ".csv";
    return spec;
}

} // namespace ppow::experiment
