#pragma once

#include "unichain/errors.hpp"
#include "unichain/model.hpp"
#include "unichain/solver.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace unichain {

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; identical across standard libraries.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t index_draw(std::mt19937_64& rng, std::size_t bound) {
    return static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(bound)) % bound;
}

/// Row with every entry >= floor: uniform weights, shifted by the floor and scaled to sum 1.
inline std::vector<double> floored_row(std::mt19937_64& rng, std::size_t n, double floor) {
    std::vector<double> w(n);
    for (double& x : w) x = unit_draw(rng) + 1e-3;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const double spread = 1.0 - floor * static_cast<double>(n);
    for (double& x : w) x = floor + spread * (x / total);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= sum;
    return w;
}

} // namespace detail

struct RewardRange {
    double lo = 0.0;
    double hi = 1.0;
};

/**
 * Random model whose transition entries are all >= min_prob, so every
 * policy's chain is irreducible and aperiodic. Deterministic per seed.
 */
inline MdpModel random_unichain_instance(std::size_t num_states, std::size_t num_actions, double min_prob,
                                         RewardRange rewards, std::uint64_t seed) {
    if (num_states == 0 || num_actions == 0)
        throw Error(ErrorCode::infeasible_parameter, "need at least one state and one action");
    if (!(min_prob > 0.0) || !(min_prob * static_cast<double>(num_states) < 1.0))
        throw Error(ErrorCode::infeasible_parameter, "min_prob must lie in (0, 1/num_states)");
    if (!(rewards.lo <= rewards.hi))
        throw Error(ErrorCode::infeasible_parameter, "reward range is empty");

    std::mt19937_64 rng(seed);
    MdpModel::Transitions p(num_actions, MdpModel::Rewards(num_states));
    MdpModel::Rewards r(num_actions, std::vector<double>(num_states));
    for (Action a = 0; a < num_actions; ++a)
        for (State i = 0; i < num_states; ++i) p[a][i] = detail::floored_row(rng, num_states, min_prob);
    for (Action a = 0; a < num_actions; ++a)
        for (State i = 0; i < num_states; ++i) r[a][i] = rewards.lo + (rewards.hi - rewards.lo) * detail::unit_draw(rng);
    return MdpModel(p, r, std::nullopt, "random-" + std::to_string(num_states) + "x" + std::to_string(num_actions) +
                                            "-seed" + std::to_string(seed));
}

/**
 * Random model with structural zeros. Every action moves state i to i+1 (mod n)
 * with positive probability, so every policy is irreducible; other edges are
 * present with probability extra_edge_prob. With extra_edge_prob = 0 every
 * chain is a deterministic n-cycle (periodic).
 */
inline MdpModel random_cyclic_instance(std::size_t num_states, std::size_t num_actions, double extra_edge_prob,
                                       RewardRange rewards, std::uint64_t seed) {
    if (num_states == 0 || num_actions == 0)
        throw Error(ErrorCode::infeasible_parameter, "need at least one state and one action");
    if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0))
        throw Error(ErrorCode::infeasible_parameter, "extra_edge_prob must lie in [0,1]");
    std::mt19937_64 rng(seed);
    MdpModel::Transitions p(num_actions, MdpModel::Rewards(num_states, std::vector<double>(num_states, 0.0)));
    MdpModel::Rewards r(num_actions, std::vector<double>(num_states));
    for (Action a = 0; a < num_actions; ++a) {
        for (State i = 0; i < num_states; ++i) {
            auto& row = p[a][i];
            row[(i + 1) % num_states] = 0.5 + detail::unit_draw(rng);
            for (State j = 0; j < num_states; ++j)
                if (j != (i + 1) % num_states && detail::unit_draw(rng) < extra_edge_prob)
                    row[j] = 0.05 + detail::unit_draw(rng);
            const double total = std::accumulate(row.begin(), row.end(), 0.0);
            for (double& x : row) x /= total;
        }
    }
    for (Action a = 0; a < num_actions; ++a)
        for (State i = 0; i < num_states; ++i) r[a][i] = rewards.lo + (rewards.hi - rewards.lo) * detail::unit_draw(rng);
    return MdpModel(p, r, std::nullopt, "cyclic-" + std::to_string(num_states) + "x" + std::to_string(num_actions) +
                                            "-seed" + std::to_string(seed));
}

/**
 * Rewrites `tied_states` randomly chosen (state, action) pairs so that the
 * action ties with the optimal one in the average-reward optimality equation.
 *
 * Policy iteration provides an optimal policy with gain g and bias h. For each
 * chosen state i a non-optimal action gets a fresh row q (entries >= min_prob)
 * and reward g + h(i) - q.h; every policy mixing original and rewritten
 * actions then keeps gain g, so the optimal set has at least 2^tied_states
 * members. Continuous random instances almost never have ties on their own.
 */
inline MdpModel plant_optimal_ties(const MdpModel& model, std::size_t tied_states, double min_prob,
                                   std::uint64_t seed) {
    if (model.num_actions() < 2 || tied_states == 0) return model;
    if (tied_states > model.num_states())
        throw Error(ErrorCode::infeasible_parameter, "cannot tie more states than the model has");
    const PolicyIterationResult solved = policy_iteration(model);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<State> states(model.num_states());
    std::iota(states.begin(), states.end(), State{0});
    for (std::size_t k = 0; k < tied_states; ++k)
        std::swap(states[k], states[k + detail::index_draw(rng, states.size() - k)]);

    auto p = model.transitions();
    auto r = model.rewards();
    for (std::size_t k = 0; k < tied_states; ++k) {
        const State i = states[k];
        Action a = detail::index_draw(rng, model.num_actions() - 1);
        if (a >= solved.policy[i]) ++a;
        p[a][i] = detail::floored_row(rng, model.num_states(), min_prob);
        double continuation = 0.0;
        for (State j = 0; j < model.num_states(); ++j) continuation += p[a][i][j] * solved.bias[j];
        r[a][i] = solved.gain.value + solved.bias[i] - continuation;
    }
    return MdpModel(p, r, model.initial(), model.name() + "-ties" + std::to_string(tied_states));
}

} // namespace unichain
