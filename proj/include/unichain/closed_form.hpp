#pragma once

#include "unichain/chain_eval.hpp"
#include "unichain/errors.hpp"
#include "unichain/model.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace unichain {

inline constexpr double default_denominator_tolerance = 1e-12;

/**
 * Stationary distribution of the fourth policy in a two-state switch square.
 *
 * The four policies agree everywhere except at s1 and s2. `base` (a) uses the
 * incumbent actions at both states, `switched_second` (b) switches only s2,
 * `switched_first` (c) switches only s1; the result (d) is the distribution
 * of the policy that switches both:
 *
 *   d_i ∝ a_{s2} b_{s1} c_i - a_i b_{s1} c_{s2} + a_{s1} b_i c_{s2}
 *
 * The denominator a_{s2} b_{s1} - b_{s1} c_{s2} + a_{s1} c_{s2} is nonzero in
 * exact arithmetic but can cancel; `denom_tol` is relative to the sum of the
 * magnitudes of its three terms. On degenerate-denominator or
 * non-positive-result the caller should solve the fourth chain directly.
 * Structural preconditions on the policies are not checked here.
 */
inline StationaryDistribution four_policy_distribution(const StationaryDistribution& base,
                                                       const StationaryDistribution& switched_second,
                                                       const StationaryDistribution& switched_first, State s1,
                                                       State s2,
                                                       double denom_tol = default_denominator_tolerance) {
    const std::size_t n = base.size();
    if (switched_second.size() != n || switched_first.size() != n)
        throw Error(ErrorCode::invalid_model, "distributions have different lengths");
    if (s1 >= n || s2 >= n || s1 == s2)
        throw Error(ErrorCode::invalid_model, "switch states must be two distinct valid states");

    const auto& a = base;
    const auto& b = switched_second;
    const auto& c = switched_first;
    const double t1 = a[s2] * b[s1];
    const double t2 = b[s1] * c[s2];
    const double t3 = a[s1] * c[s2];
    const double alpha = t1 - t2 + t3;
    const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3);
    if (!(std::abs(alpha) >= denom_tol * scale) || alpha == 0.0)
        throw Error(ErrorCode::degenerate_denominator, "four-policy denominator cancels");

    std::vector<double> d(n);
    for (State i = 0; i < n; ++i) {
        d[i] = (t1 * c[i] - a[i] * t2 + t3 * b[i]) / alpha;
        if (!(d[i] > 0.0))
            throw Error(ErrorCode::non_positive_result,
                        "four-policy formula gives a non-positive mass at state " + std::to_string(i));
    }
    const double sum = std::accumulate(d.begin(), d.end(), 0.0);
    for (double& p : d) p /= sum;
    return StationaryDistribution(std::move(d));
}

/**
 * Invariant distribution when randomizing at the single state s1 between two
 * policies that differ only there: with probability lambda the first policy's
 * action (distribution a), otherwise the second's (distribution b).
 */
inline StationaryDistribution mixture_distribution(const StationaryDistribution& first,
                                                   const StationaryDistribution& second, State s1,
                                                   double lambda) {
    const std::size_t n = first.size();
    if (second.size() != n || s1 >= n)
        throw Error(ErrorCode::invalid_model, "mixture inputs have inconsistent sizes");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw Error(ErrorCode::infeasible_parameter, "mixing weight must lie in [0,1]");

    const double wa = lambda * second[s1];
    const double wb = (1.0 - lambda) * first[s1];
    const double denom = wa + wb;
    std::vector<double> c(n);
    for (State i = 0; i < n; ++i) c[i] = (wa * first[i] + wb * second[i]) / denom;
    const double sum = std::accumulate(c.begin(), c.end(), 0.0);
    for (double& p : c) p /= sum;
    return StationaryDistribution(std::move(c));
}

/// Average reward of the single-state mixture; a positively weighted mean of v1 and v2.
inline double mixture_reward(double v1, double v2, double a_s1, double b_s1, double lambda) {
    const double w1 = lambda * b_s1;
    const double w2 = (1.0 - lambda) * a_s1;
    return (w1 * v1 + w2 * v2) / (w1 + w2);
}

} // namespace unichain
