// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/analytic.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace ppow::analytic {

void GammaBoundInputs::validate() const
{
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(alpha >= 0.0) || !(alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
    if (!(delta_b >= 0.0) || !(delta_p >= 0.0)) throw std::invalid_argument("delays must be non-negative");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    if (!(D >= 0.0) || !(D < 1.0)) throw std::invalid_argument("D must lie in [0, 1)");
}

double effective_exposure(const GammaBoundInputs& in)
{
    const double up = 1.0 + in.D;
    const double down = 1.0 - in.D;
    return in.delta_b * 2.0 * up * up / (down * down) + in.delta_p * 2.0 / down;
}

double gamma_bound_lemma1(const GammaBoundInputs& in)
{
    in.validate();
    const double n = static_cast<double>(in.n);
    const double win_first = (n - 1.0) / (n + in.alpha / (1.0 - in.alpha));
    const double g = 1.0 - win_first * std::exp(-effective_exposure(in) / in.T);
    assert(g >= 0.0 && g <= 1.0);
    return g;
}

double gamma_bound_lemma2(const GammaBoundInputs& in)
{
    in.validate();
    const double g = 1.0 - 0.5 * std::exp(-effective_exposure(in) / in.T);
    assert(g >= 0.5 && g <= 1.0);
    return g;
}

double gamma_bound(const GammaBoundInputs& in)
{
    return std::min(gamma_bound_lemma1(in), gamma_bound_lemma2(in));
}

double unresponsive_probability(Seconds s, Seconds T)
{
    if (!(s >= 0.0)) throw std::invalid_argument("unresponsive time must be non-negative");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
    return -std::expm1(-s / T);
}

double EsmInputs::o() const
{
    if (const auto* s = std::get_if<UnresponsiveTime>(&unresponsive)) return unresponsive_probability(s->s, T);
    const double o = std::get<TieProbability>(unresponsive).o;
    if (!(o >= 0.0) || !(o <= 1.0)) throw std::invalid_argument("tie probability o must lie in [0, 1]");
    return o;
}

double esm_relative_revenue(const EsmInputs& in)
{
    const double a = in.alpha;
    if (!(a >= 0.0) || !(a <= 0.5))
        throw std::domain_error("esm_relative_revenue: alpha must lie in [0, 0.5], got " + std::to_string(a));
    if (!(in.gamma >= 0.0 && in.gamma <= 1.0) || !(in.gamma_prime >= 0.0 && in.gamma_prime <= 1.0))
        throw std::invalid_argument("gamma and gamma' must lie in [0, 1]");
    const double o = in.o();
    const double g = in.gamma;
    const double gp = in.gamma_prime;
    const double b = 1.0 - a;

    const double denom = (1.0 - o * b) * (a * a * a - 4.0 * a * a + 2.0 * a) + (1.0 + o * a) * (1.0 - 2.0 * a) * b;
    assert(denom > 0.0);

    const double pre = o * a * b * (1.0 - 2.0 * a) * (2.0 * a + gp * b);
    const double post = (1.0 - o * b) * (4.0 * a * a * a * a - 9.0 * a * a * a + 4.0 * a * a + g * a * (1.0 - 2.0 * a) * b * b);
    return (pre + post) / denom;
}

double eyal_sirer_revenue(double alpha, double gamma)
{
    const double a = alpha;
    const double num = a * (1.0 - a) * (1.0 - a) * (4.0 * a + gamma * (1.0 - 2.0 * a)) - a * a * a;
    const double den = 1.0 - a * (1.0 + (2.0 - a) * a);
    return num / den;
}

ThresholdResult sm_threshold(const ThresholdQuery& q)
{
    if (!(q.s >= 0.0)) throw std::invalid_argument("unresponsive time must be non-negative");
    GammaBoundInputs proto = q.protocol;
    proto.alpha = 0.25;
    proto.validate();

    const double o = unresponsive_probability(q.s, q.protocol.T);
    auto excess = [&](double alpha) {
        EsmInputs in;
        in.alpha = alpha;
        in.T = q.protocol.T;
        in.unresponsive = TieProbability{o};
        switch (q.mode) {
        case ThresholdMode::Proposed:
            proto.alpha = alpha;
            in.gamma = gamma_bound(proto);
            in.gamma_prime = q.gamma_prime;
            break;
        case ThresholdMode::RandomRule:
            in.gamma = 0.5;
            in.gamma_prime = 0.5;
            break;
        case ThresholdMode::ConstantGamma:
            in.gamma = q.constant_gamma;
            in.gamma_prime = q.gamma_prime;
            break;
        }
        return esm_relative_revenue(in) - alpha;
    };

    // coarse scan brackets the first sign change, bisection refines it
    constexpr int scan_steps = 512;
    const double first = 1e-6;
    const double last = 0.5 - 1e-6;
    if (!(excess(first) < 0.0)) throw NoCrossingError("relative revenue already exceeds alpha at the lower end");
    double lo = first;
    double hi = first;
    bool bracketed = false;
    for (int k = 1; k <= scan_steps; ++k) {
        const double x = first + (last - first) * k / scan_steps;
        if (excess(x) > 0.0) {
            hi = x;
            bracketed = true;
            break;
        }
        lo = x;
    }
    if (!bracketed) throw NoCrossingError("relative revenue does not cross alpha on (1e-6, 0.5)");

    ThresholdResult result;
    while (hi - lo > q.tolerance && result.iterations < q.max_iterations) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) > 0.0) hi = mid;
        else lo = mid;
        ++result.iterations;
    }
    result.alpha = 0.5 * (lo + hi);
    return result;
}

} // namespace ppow::analytic
