// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PPOW_EXPERIMENT_HPP
#define PPOW_EXPERIMENT_HPP

#include <ppow/analytic.hpp>
#include <ppow/simulator.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ppow::experiment {

enum class Kind { GammaVsN, GammaVsRatio, RevenueVsAlpha, Threshold, SimGamma, SimRevenue };

const char* to_string(Kind k);
Kind parse_kind(const std::string& text);
bool is_simulation(Kind k);

/** Bad configuration; maps to exit code 2. */
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Swept values. Every list holds at least one value once a spec is valid.
 * `delta` entries set delta_b and delta_p together and sweep them as one axis.
 */
struct Grid {
    std::vector<double> n{50};
    std::vector<double> alpha{0.5};
    std::vector<double> delta_b{10};
    std::vector<double> delta_p{10};
    bool paired_delta = true;
    std::vector<double> T{600};
    std::vector<double> D{0};
    std::vector<double> s{0};
    std::vector<double> gamma_prime{1};
    std::vector<double> ratio{0.0667};  ///< (2 delta_b + 2 delta_p) / T, gamma-vs-ratio only
};

struct ExperimentSpec {
    Kind kind = Kind::GammaVsN;
    Grid grid;
    bool zip = false;  ///< pair list entries positionally instead of taking the product

    analytic::ThresholdMode threshold_mode = analytic::ThresholdMode::Proposed;
    double constant_gamma = 0.5;

    std::vector<std::uint64_t> seeds;
    sim::Strategy strategy = sim::Strategy::SelfishMining;
    std::size_t honest_miners = 30;
    std::uint64_t post_ties = 1000;
    std::uint64_t finalized_blocks = 2000;
    std::optional<std::uint32_t> max_private_lead;  ///< unset: 2 for sim-gamma, none for sim-revenue
    double max_time = 1e9;
    bool honest_sufficiency_check = false;
    bool attacker_zero_delay = true;
    bool random_drift = false;
    std::string event_log;  ///< simulation event log path, single-point runs only

    std::string out;
    unsigned jobs = 1;
};

/**
 * Applies one `key=value` setting. Lists are comma separated; an item
 * `a:b[:step]` expands to an inclusive range (step defaults to 1).
 */
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);

/**
 * Reads whitespace-separated `key=value` tokens, '#' to end of line is a
 * comment. Errors carry `origin:line:`.
 */
void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& origin = "<config>");
void apply_config_file(ExperimentSpec& spec, const std::string& path);

/** defaults < file < flags. `flags` are applied in order. */
ExperimentSpec parse_config(const std::optional<std::string>& path,
                            const std::vector<std::pair<std::string, std::string>>& flags,
                            ExperimentSpec base = {});

/** Named figure grids: fig4, fig5, fig6, fig7, fig9, fig10, fig11, thresholds, sim-gamma. */
ExperimentSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/** Throws ConfigError on empty grids, missing seeds or out-of-domain parameters. */
void validate(const ExperimentSpec& spec);

/** One expanded grid point. */
struct Point {
    std::uint32_t n = 50;
    double alpha = 0.5;
    double delta_b = 10;
    double delta_p = 10;
    double T = 600;
    double D = 0;
    double s = 0;
    double gamma_prime = 1;
    double ratio = 0;
    std::uint64_t seed = 0;
};

std::vector<Point> expand(const ExperimentSpec& spec);

sim::SimConfig make_sim_config(const ExperimentSpec& spec, const Point& p);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<double> runtime_s;  ///< per row, kept out of the CSV
};

/**
 * Evaluates every grid point on a pool of `spec.jobs` workers. Rows are in
 * grid order. `progress` receives one summary line per point.
 */
Table evaluate(const ExperimentSpec& spec, std::ostream* progress = nullptr);

std::string to_csv(const Table& table);
std::string format_number(double v);

/** Writes `spec.out` and `spec.out + ".meta.json"`. Throws std::runtime_error on I/O failure. */
Table run_experiment(const ExperimentSpec& spec, std::ostream* progress = nullptr);

} // namespace ppow::experiment

#endif // PPOW_EXPERIMENT_HPP
