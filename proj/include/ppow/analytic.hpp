// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PPOW_ANALYTIC_HPP
#define PPOW_ANALYTIC_HPP

#include <ppow/core.hpp>

#include <stdexcept>
#include <variant>

namespace ppow::analytic {

struct GammaBoundInputs {
    std::uint32_t n = 50;
    double alpha = 0.5;
    Seconds delta_b = 10.0;
    Seconds delta_p = 10.0;
    Seconds T = 600.0;
    double D = 0.0;

    void validate() const;
};

/**
 * Drift-adjusted delay exponent numerator:
 * delta_b * 2(1+D)^2/(1-D)^2 + delta_p * 2/(1-D).  Equals 2*delta_b + 2*delta_p at D = 0.
 */
double effective_exposure(const GammaBoundInputs& in);

/// Bound from a strictly larger honest shared set winning the tie.
double gamma_bound_lemma1(const GammaBoundInputs& in);
/// Bound from honest miners at least matching the attacker's set and winning half the draws.
double gamma_bound_lemma2(const GammaBoundInputs& in);
/// min of the two bounds.
double gamma_bound(const GammaBoundInputs& in);

/** Probability that the network finds a block within s seconds: 1 - exp(-s/T). */
double unresponsive_probability(Seconds s, Seconds T);

struct UnresponsiveTime {
    Seconds s = 0.0;
};
struct TieProbability {
    double o = 0.0;
};

struct EsmInputs {
    double alpha = 0.0;
    double gamma = 0.0;
    double gamma_prime = 1.0;
    std::variant<UnresponsiveTime, TieProbability> unresponsive = TieProbability{0.0};
    Seconds T = 600.0;

    /** The tie probability o, derived from s when the unresponsive time is given. */
    double o() const;
};

/**
 * Attacker relative revenue of extended selfish mining. o = 0 reduces to
 * classic selfish mining. Throws std::domain_error for alpha outside [0, 0.5].
 */
double esm_relative_revenue(const EsmInputs& in);

/** Classic selfish-mining revenue closed form, kept as an independent algebraic route. */
double eyal_sirer_revenue(double alpha, double gamma);

enum class ThresholdMode {
    Proposed,      ///< gamma(alpha) = gamma_bound at each alpha
    RandomRule,    ///< gamma = gamma' = 0.5
    ConstantGamma, ///< caller-supplied gamma
};

struct ThresholdQuery {
    GammaBoundInputs protocol; ///< alpha is ignored
    Seconds s = 0.0;
    double gamma_prime = 1.0;
    ThresholdMode mode = ThresholdMode::Proposed;
    double constant_gamma = 0.5;
    double tolerance = 1e-6;
    int max_iterations = 200;
};

struct ThresholdResult {
    double alpha = 0.0;
    int iterations = 0;
};

class NoCrossingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Smallest alpha in (0, 0.5) at which revenue equals alpha; bisection. */
ThresholdResult sm_threshold(const ThresholdQuery& query);

} // namespace ppow::analytic

#endif // PPOW_ANALYTIC_HPP
