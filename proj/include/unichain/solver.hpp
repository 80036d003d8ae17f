#pragma once

#include "unichain/chain_eval.hpp"
#include "unichain/errors.hpp"
#include "unichain/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace unichain {

/// Policies whose gain is within `tolerance` of the best gain found.
struct OptimalSet {
    double gain = -std::numeric_limits<double>::infinity();
    std::vector<PurePolicy> policies; ///< lexicographic order
    double tolerance = default_equality_tolerance;
    /// gain minus the best value among non-members; +inf when every policy is optimal
    double separation = std::numeric_limits<double>::infinity();
    std::size_t policies_evaluated = 0;

    bool contains(const PurePolicy& p) const {
        return std::binary_search(policies.begin(), policies.end(), p);
    }
};

inline constexpr std::size_t default_max_policies = std::size_t{1} << 20;

/**
 * Exhaustive search over all |A|^|S| pure policies.
 *
 * Throws policy_space_too_large above max_policies, and reducible_policy
 * (with the witness) as soon as an enumerated chain cannot be solved.
 */
inline OptimalSet brute_force_optimal_set(const MdpModel& model, double tol = default_equality_tolerance,
                                          std::size_t max_policies = default_max_policies,
                                          double solve_tol = default_solve_tolerance) {
    if (policy_count(model) > max_policies)
        throw Error(ErrorCode::policy_space_too_large,
                    "policy space exceeds " + std::to_string(max_policies) + " policies");
    std::vector<std::pair<PurePolicy, double>> values;
    values.reserve(policy_count(model));
    double best = -std::numeric_limits<double>::infinity();
    for (const PurePolicy& policy : enumerate_policies(model)) {
        double v = 0.0;
        try {
            v = average_reward(model, policy, solve_tol).value;
        } catch (const Error& e) {
            if (!e.signals_reducibility()) throw;
            throw Error(ErrorCode::reducible_policy, "policy " + to_string(policy) + " induces a reducible chain",
                        policy.actions);
        }
        best = std::max(best, v);
        values.emplace_back(policy, v);
    }

    OptimalSet set;
    set.gain = best;
    set.tolerance = tol;
    set.policies_evaluated = values.size();
    double runner_up = -std::numeric_limits<double>::infinity();
    for (auto& [policy, v] : values) {
        if (best - v <= tol)
            set.policies.push_back(std::move(policy));
        else
            runner_up = std::max(runner_up, v);
    }
    set.separation = best - runner_up;
    return set;
}

/// Which maximizer replaces a beaten incumbent. A tied incumbent is always kept.
enum class TieBreak { lowest_index, highest_index };

struct GainBias {
    double gain = 0.0;
    std::vector<double> bias; ///< bias[0] == 0
};

/// Solves g + h(i) = r(i) + sum_j P(i,j) h(j) with h(0) = 0.
inline GainBias solve_gain_bias(const TransitionMatrix& chain, const std::vector<double>& rewards) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    Eigen::MatrixXd system(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        system(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < n; ++j)
            system(i, j) = (i == j ? 1.0 : 0.0) - chain(static_cast<State>(i), static_cast<State>(j));
        rhs(i) = rewards[static_cast<std::size_t>(i)];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw Error(ErrorCode::singular_system, "gain/bias system is singular; chain is not unichain");
    Eigen::VectorXd x = lu.solve(rhs);
    GainBias out;
    out.gain = x(0);
    out.bias.assign(chain.size(), 0.0);
    for (Eigen::Index j = 1; j < n; ++j) out.bias[static_cast<std::size_t>(j)] = x(j);
    return out;
}

struct PolicyIterationResult {
    PurePolicy policy;
    GainReport gain;
    std::vector<double> bias;
    std::vector<double> gain_history; ///< gain of each evaluated policy, in order
    std::size_t iterations = 0;
    bool converged = false;
};

inline std::size_t default_max_iterations(const MdpModel& model) {
    constexpr std::size_t cap = 100'000;
    std::size_t iters = 1;
    for (std::size_t s = 0; s < std::min<std::size_t>(model.num_states(), 20); ++s) {
        iters *= model.num_actions();
        if (iters >= cap) return cap;
    }
    return iters;
}

/**
 * Average-reward policy iteration for unichain models.
 *
 * Evaluation solves the gain/bias system with the bias pinned at state 0;
 * improvement switches an action only if it beats the incumbent by more than a
 * small relative margin, so equal-value alternatives never cause cycling.
 */
inline PolicyIterationResult policy_iteration(const MdpModel& model, TieBreak tie_break = TieBreak::lowest_index,
                                              std::size_t max_iters = 0,
                                              const PurePolicy* initial = nullptr) {
    if (max_iters == 0) max_iters = default_max_iterations(model);
    const std::size_t n = model.num_states();
    PolicyIterationResult result;
    result.policy = initial ? *initial : PurePolicy(std::vector<Action>(n, 0));
    check_policy(model, result.policy);

    double reward_scale = 1.0;
    for (Action a = 0; a < model.num_actions(); ++a)
        for (State i = 0; i < n; ++i) reward_scale = std::max(reward_scale, std::abs(model.reward(a, i)));
    const double margin = 1e-11 * reward_scale;

    for (;;) {
        GainBias gb;
        try {
            gb = solve_gain_bias(induced_chain(model, result.policy), induced_rewards(model, result.policy));
        } catch (const Error& e) {
            throw Error(e.code(), e.detail(), result.policy.actions);
        }
        ++result.iterations;
        result.gain_history.push_back(gb.gain);
        result.gain = GainReport{gb.gain, GainMethod::direct_solve, 0.0, true, 0};
        result.bias = gb.bias;

        PurePolicy next = result.policy;
        bool changed = false;
        for (State i = 0; i < n; ++i) {
            std::vector<double> q(model.num_actions());
            for (Action a = 0; a < model.num_actions(); ++a) q[a] = model.reward(a, i) + dot(model.row(a, i), gb.bias);
            const double best = *std::max_element(q.begin(), q.end());
            const Action incumbent = result.policy[i];
            if (best <= q[incumbent] + margin) continue;
            Action pick = incumbent;
            for (Action k = 0; k < model.num_actions(); ++k) {
                const Action a = tie_break == TieBreak::lowest_index ? k : model.num_actions() - 1 - k;
                if (q[a] >= best - margin) {
                    pick = a;
                    break;
                }
            }
            next[i] = pick;
            changed = true;
        }
        if (!changed) {
            result.converged = true;
            break;
        }
        if (result.iterations >= max_iters) {
            result.converged = false;
            result.gain.converged = false;
            break;
        }
        result.policy = std::move(next);
    }
    return result;
}

} // namespace unichain
