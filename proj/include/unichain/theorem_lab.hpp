#pragma once

#include "unichain/chain_eval.hpp"
#include "unichain/closed_form.hpp"
#include "unichain/errors.hpp"
#include "unichain/model.hpp"
#include "unichain/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace unichain {

/// Sorted states at which two pure policies choose different actions.
struct DisagreementSet {
    std::vector<State> states;
    std::size_t size() const noexcept { return states.size(); }
    bool empty() const noexcept { return states.empty(); }
};

inline DisagreementSet disagreement(const PurePolicy& p1, const PurePolicy& p2) {
    if (p1.size() != p2.size()) throw Error(ErrorCode::invalid_policy, "policies have different lengths");
    DisagreementSet d;
    for (State s = 0; s < p1.size(); ++s)
        if (p1[s] != p2[s]) d.states.push_back(s);
    return d;
}

/// Bit k of the selector picks p2's action (1) or p1's (0) on the k-th disagreement state.
inline PurePolicy combine(const PurePolicy& p1, const PurePolicy& p2, const std::vector<bool>& selector) {
    const DisagreementSet d = disagreement(p1, p2);
    if (selector.size() != d.size())
        throw Error(ErrorCode::selector_mismatch, "selector has " + std::to_string(selector.size()) +
                                                      " bits but the policies differ in " +
                                                      std::to_string(d.size()) + " states");
    PurePolicy out = p1;
    for (std::size_t k = 0; k < d.size(); ++k)
        if (selector[k]) out[d.states[k]] = p2[d.states[k]];
    return out;
}

/// Gain of a policy whose chain may be reducible: direct solve, else Cesàro limit from μ₀ (or uniform).
struct RobustGain {
    double value = 0.0;
    bool reducible = false;
    bool converged = true;
};

inline RobustGain robust_gain(const TransitionMatrix& chain, const std::vector<double>& rewards,
                              const std::vector<double>& start) {
    try {
        return {evaluate_chain(chain, rewards).gain.value, false, true};
    } catch (const Error& e) {
        if (!e.signals_reducibility()) throw;
    }
    const GainReport r = cesaro_chain_gain(chain, rewards, start);
    return {r.value, true, r.converged};
}

inline RobustGain robust_gain(const MdpModel& model, const PurePolicy& policy) {
    return robust_gain(induced_chain(model, policy), induced_rewards(model, policy), default_start(model));
}

struct Witness {
    std::variant<PurePolicy, MixedPolicy> policy;
    double value = 0.0;
    bool reducible = false;
};

inline std::string describe(const Witness& w) {
    if (const auto* p = std::get_if<PurePolicy>(&w.policy)) return to_string(*p);
    const auto& m = std::get<MixedPolicy>(w.policy);
    std::string out = "[";
    for (State s = 0; s < m.size(); ++s) {
        if (s > 0) out += "; ";
        for (std::size_t a = 0; a < m.at(s).size(); ++a) {
            if (a > 0) out += ",";
            out += std::to_string(m.at(s)[a]);
        }
    }
    return out + "]";
}

struct ClosureReport {
    std::string instance;
    double gain = 0.0;
    double tolerance = default_equality_tolerance;
    std::size_t num_optimal = 0;
    std::size_t combinations_tested = 0;
    double max_deviation = 0.0;
    bool pass = true;
    std::vector<Witness> witnesses;       ///< members whose value deviates by more than tolerance
    std::vector<PurePolicy> reducible;    ///< combinations evaluated through the Cesàro fallback
    std::size_t closed_form_checks = 0;   ///< single-state mixtures cross-checked against the closed form
    double closed_form_max_error = 0.0;
    std::size_t sandwich_violations = 0;  ///< single-state mixtures outside [min(V1,V2), max(V1,V2)]
};

struct ClosureOptions {
    double tol = default_equality_tolerance;
    std::size_t max_combinations_per_pair = std::size_t{1} << 16; ///< beyond this, selectors are sampled
    std::size_t max_total = std::size_t{1} << 22;
    std::uint64_t seed = 0;
};

/**
 * Evaluates every combination of every pair of policies in `optimal` and
 * compares against optimal.gain. Combinations whose chains are reducible are
 * evaluated through the Cesàro fallback and listed in `reducible`.
 */
inline ClosureReport verify_combination_closure(const MdpModel& model, const OptimalSet& optimal,
                                                const ClosureOptions& options = {}) {
    ClosureReport report;
    report.instance = model.name();
    report.gain = optimal.gain;
    report.tolerance = options.tol;
    report.num_optimal = optimal.policies.size();

    const auto& members = optimal.policies;
    std::size_t planned = members.size();
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            const std::size_t s = disagreement(members[i], members[j]).size();
            const std::size_t full = s >= 63 ? std::numeric_limits<std::size_t>::max() : (std::size_t{1} << s);
            planned += std::min(full, options.max_combinations_per_pair);
            if (planned > options.max_total)
                throw Error(ErrorCode::too_many_combinations,
                            "closure check needs more than " + std::to_string(options.max_total) + " evaluations");
        }

    std::map<PurePolicy, RobustGain> cache;
    auto check = [&](const PurePolicy& policy) {
        ++report.combinations_tested;
        auto it = cache.find(policy);
        if (it != cache.end()) return;
        const RobustGain g = robust_gain(model, policy);
        cache.emplace(policy, g);
        if (g.reducible) report.reducible.push_back(policy);
        const double dev = std::abs(g.value - optimal.gain);
        report.max_deviation = std::max(report.max_deviation, dev);
        if (dev > options.tol) report.witnesses.push_back({policy, g.value, g.reducible});
    };

    std::mt19937_64 rng(options.seed);
    for (const auto& p : members) check(p);
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            const std::size_t s = disagreement(members[i], members[j]).size();
            std::vector<bool> selector(s);
            if (s < 63 && (std::size_t{1} << s) <= options.max_combinations_per_pair) {
                for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << s); ++bits) {
                    for (std::size_t k = 0; k < s; ++k) selector[k] = (bits >> k) & 1U;
                    check(combine(members[i], members[j], selector));
                }
            } else {
                std::bernoulli_distribution coin(0.5);
                for (std::size_t draw = 0; draw < options.max_combinations_per_pair; ++draw) {
                    for (std::size_t k = 0; k < s; ++k) selector[k] = coin(rng);
                    check(combine(members[i], members[j], selector));
                }
            }
        }
    }
    std::sort(report.witnesses.begin(), report.witnesses.end(), [](const Witness& x, const Witness& y) {
        return std::get<PurePolicy>(x.policy) < std::get<PurePolicy>(y.policy);
    });
    report.pass = report.max_deviation <= options.tol;
    return report;
}

struct InterpolationChain {
    std::vector<PurePolicy> policies; ///< p1 = policies.front(), p2 = policies.back()
    std::vector<double> gains;
    bool hypothesis_holds = false;    ///< gains[0] >= gains[1] (within tol); vacuous for s = 0
    bool non_increasing = true;       ///< every step satisfies gains[i] <= gains[i-1] + tol
};

/**
 * Greedy single-switch path from p1 to p2: each step flips one remaining
 * disagreement state to p2's action, choosing the flip with the largest gain
 * (ties within tol go to the lowest state index).
 */
inline InterpolationChain interpolation_chain(const MdpModel& model, const PurePolicy& p1, const PurePolicy& p2,
                                              double tol = default_equality_tolerance) {
    check_policy(model, p1);
    check_policy(model, p2);
    InterpolationChain chain;
    PurePolicy current = p1;
    chain.policies.push_back(current);
    chain.gains.push_back(average_reward(model, current).value);

    std::vector<State> remaining = disagreement(p1, p2).states;
    while (!remaining.empty()) {
        std::vector<double> values(remaining.size());
        for (std::size_t k = 0; k < remaining.size(); ++k) {
            PurePolicy candidate = current;
            candidate[remaining[k]] = p2[remaining[k]];
            values[k] = average_reward(model, candidate).value;
        }
        const double best = *std::max_element(values.begin(), values.end());
        std::size_t pick = 0;
        while (values[pick] < best - tol) ++pick;
        current[remaining[pick]] = p2[remaining[pick]];
        chain.policies.push_back(current);
        chain.gains.push_back(values[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }

    chain.hypothesis_holds = chain.gains.size() < 2 || chain.gains[0] >= chain.gains[1] - tol;
    for (std::size_t i = 1; i < chain.gains.size(); ++i)
        if (chain.gains[i] > chain.gains[i - 1] + tol) chain.non_increasing = false;
    return chain;
}

/// Four policies that coincide outside {s1, s2}; index [x][y] switches s1 iff x, s2 iff y.
struct SwitchSquare {
    std::array<std::array<PurePolicy, 2>, 2> policies;
    State s1 = 0;
    State s2 = 0;

    const PurePolicy& at(int x, int y) const { return policies[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]; }
};

inline SwitchSquare make_switch_square(const PurePolicy& base, State s1, Action alt1, State s2, Action alt2) {
    if (s1 == s2 || s1 >= base.size() || s2 >= base.size())
        throw Error(ErrorCode::invalid_policy, "switch states must be distinct and valid");
    if (base[s1] == alt1 || base[s2] == alt2)
        throw Error(ErrorCode::invalid_policy, "alternative actions must differ from the base policy");
    SwitchSquare sq;
    sq.s1 = s1;
    sq.s2 = s2;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            PurePolicy p = base;
            if (x) p[s1] = alt1;
            if (y) p[s2] = alt2;
            sq.policies[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = std::move(p);
        }
    return sq;
}

/// Returns (s1, s2) when the four policies have the required two-state switch structure.
inline std::optional<std::pair<State, State>> switch_square_states(const PurePolicy& p00, const PurePolicy& p01,
                                                                   const PurePolicy& p10, const PurePolicy& p11) {
    const std::size_t n = p00.size();
    if (p01.size() != n || p10.size() != n || p11.size() != n) return std::nullopt;
    std::optional<State> s1, s2;
    for (State i = 0; i < n; ++i) {
        const bool all_equal = p00[i] == p01[i] && p00[i] == p10[i] && p00[i] == p11[i];
        if (all_equal) continue;
        if (p00[i] == p01[i] && p10[i] == p11[i] && p00[i] != p10[i]) {
            if (s1) return std::nullopt;
            s1 = i;
        } else if (p00[i] == p10[i] && p01[i] == p11[i] && p00[i] != p01[i]) {
            if (s2) return std::nullopt;
            s2 = i;
        } else {
            return std::nullopt;
        }
    }
    if (!s1 || !s2) return std::nullopt;
    return std::make_pair(*s1, *s2);
}

struct FourthDistribution {
    StationaryDistribution distribution;
    GainMethod method; ///< closed_form, or direct_solve after a fallback
};

/// Distribution of square.at(1,1) from the other three, falling back to a direct solve.
inline FourthDistribution fourth_distribution(const MdpModel& model, const SwitchSquare& sq,
                                              double denom_tol = default_denominator_tolerance) {
    const auto a = evaluate_policy(model, sq.at(0, 0)).distribution;
    const auto b = evaluate_policy(model, sq.at(0, 1)).distribution;
    const auto c = evaluate_policy(model, sq.at(1, 0)).distribution;
    try {
        return {four_policy_distribution(a, b, c, sq.s1, sq.s2, denom_tol), GainMethod::closed_form};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::degenerate_denominator && e.code() != ErrorCode::non_positive_result) throw;
    }
    return {evaluate_policy(model, sq.at(1, 1)).distribution, GainMethod::direct_solve};
}

/**
 * Checks four average rewards of a switch square against the forbidden
 * dominance patterns and the implications derived from them, for all four
 * choices of the corner (a, b). Strict inequality means a gap larger than
 * tol; equality means a gap of at most tol. Returns identifiers of violated
 * clauses, e.g. "forbidden-max[a=0,b=0]" or "implication-iv[a=1,b=0]".
 */
inline std::vector<std::string> check_four_reward_relations(double v00, double v01, double v10, double v11,
                                                            double tol = default_equality_tolerance) {
    const double v[2][2] = {{v00, v01}, {v10, v11}};
    auto gt = [tol](double x, double y) { return x - y > tol; };
    auto lt = [tol](double x, double y) { return y - x > tol; };
    auto ge = [tol](double x, double y) { return x - y >= -tol; };
    auto le = [tol](double x, double y) { return y - x >= -tol; };
    auto eq = [tol](double x, double y) { return std::abs(x - y) <= tol; };

    std::vector<std::string> violated;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double corner = v[a][b];
            const double side1 = v[a][1 - b];
            const double side2 = v[1 - a][b];
            const double opposite = v[1 - a][1 - b];
            const double lo = std::min(side1, side2);
            const double hi = std::max(side1, side2);
            const std::string tag = "[a=" + std::to_string(a) + ",b=" + std::to_string(b) + "]";
            auto flag = [&](bool premise, bool conclusion, const char* name) {
                if (premise && !conclusion) violated.push_back(name + tag);
            };

            if (gt(corner, side1) && gt(corner, side2) && ge(opposite, side1) && ge(opposite, side2))
                violated.push_back("forbidden-max" + tag);
            if (lt(corner, side1) && lt(corner, side2) && le(opposite, side1) && le(opposite, side2))
                violated.push_back("forbidden-min" + tag);

            flag(lt(corner, side1) && lt(corner, side2), gt(opposite, lo), "implication-i");
            flag(gt(corner, side1) && gt(corner, side2), lt(opposite, hi), "implication-ii");
            flag(le(corner, side1) && le(corner, side2), ge(opposite, lo), "implication-iii");
            flag(ge(corner, side1) && ge(corner, side2), le(opposite, hi), "implication-iv");
            flag(eq(corner, side1) && eq(corner, side2), eq(opposite, corner), "implication-v");
            flag(ge(corner, side1) && ge(corner, side2) && ge(opposite, side1) && ge(opposite, side2),
                 eq(corner, side1) && eq(corner, side2) && eq(opposite, side1) && eq(opposite, side2),
                 "implication-vi");
        }
    }
    return violated;
}

/// Per-state sorted set of actions used by at least one member of `optimal`.
inline std::vector<std::vector<Action>> optimal_supports(const MdpModel& model, const OptimalSet& optimal) {
    std::vector<std::set<Action>> sets(model.num_states());
    for (const auto& p : optimal.policies) {
        check_policy(model, p);
        for (State s = 0; s < p.size(); ++s) sets[s].insert(p[s]);
    }
    std::vector<std::vector<Action>> out;
    for (State s = 0; s < sets.size(); ++s) {
        if (sets[s].empty())
            throw Error(ErrorCode::empty_support, "no optimal action recorded for state " + std::to_string(s));
        out.emplace_back(sets[s].begin(), sets[s].end());
    }
    return out;
}

/// Uniform point on the simplex over `support` (sorted-uniform gaps), embedded in num_actions slots.
template <class Rng>
std::vector<double> sample_simplex(const std::vector<Action>& support, std::size_t num_actions, Rng& rng) {
    std::vector<double> w(num_actions, 0.0);
    if (support.size() == 1) {
        w[support.front()] = 1.0;
        return w;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> cuts(support.size() - 1);
    for (double& c : cuts) c = unit(rng);
    std::sort(cuts.begin(), cuts.end());
    double prev = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
        const double next = k + 1 < support.size() ? cuts[k] : 1.0;
        w[support[k]] = next - prev;
        prev = next;
    }
    return w;
}

/**
 * Samples randomized policies whose per-state supports are drawn from the
 * optimal actions and compares their gains with optimal.gain.
 *
 * Every fourth sample randomizes a single state between two of its optimal
 * actions (point masses elsewhere); those are also checked against
 * mixture_reward and the min/max sandwich of the two pure endpoints.
 */
inline ClosureReport verify_mixture_optimality(const MdpModel& model, const OptimalSet& optimal,
                                               std::size_t num_samples, std::uint64_t seed,
                                               double tol = default_equality_tolerance) {
    const auto supports = optimal_supports(model, optimal);
    ClosureReport report;
    report.instance = model.name();
    report.gain = optimal.gain;
    report.tolerance = tol;
    report.num_optimal = optimal.policies.size();

    std::vector<State> multi;
    for (State s = 0; s < supports.size(); ++s)
        if (supports[s].size() >= 2) multi.push_back(s);

    std::mt19937_64 rng(seed);
    const std::vector<double> start = default_start(model);
    for (std::size_t draw = 0; draw < num_samples; ++draw) {
        std::vector<std::vector<double>> weights(model.num_states());
        const bool single_state = draw % 4 == 3 && !multi.empty();
        if (single_state) {
            const State s1 = multi[std::uniform_int_distribution<std::size_t>(0, multi.size() - 1)(rng)];
            for (State s = 0; s < weights.size(); ++s) {
                const auto& sup = supports[s];
                const Action pick = sup[std::uniform_int_distribution<std::size_t>(0, sup.size() - 1)(rng)];
                weights[s] = sample_simplex({pick}, model.num_actions(), rng);
            }
            std::vector<Action> pair = supports[s1];
            std::shuffle(pair.begin(), pair.end(), rng);
            pair.resize(2);
            std::sort(pair.begin(), pair.end());
            weights[s1] = sample_simplex(pair, model.num_actions(), rng);
        } else {
            for (State s = 0; s < weights.size(); ++s)
                weights[s] = sample_simplex(supports[s], model.num_actions(), rng);
        }
        MixedPolicy mixed(std::move(weights));
        const MixedChain mc = induced_mixed_chain(model, mixed);
        const RobustGain g = robust_gain(mc.chain, mc.rewards, start);
        ++report.combinations_tested;
        const double dev = std::abs(g.value - optimal.gain);
        report.max_deviation = std::max(report.max_deviation, dev);
        if (dev > tol) report.witnesses.push_back({mixed, g.value, g.reducible});

        std::vector<State> randomized;
        for (State s = 0; s < mixed.size(); ++s) {
            const auto& w = mixed.at(s);
            if (std::count_if(w.begin(), w.end(), [](double x) { return x > 0.0; }) >= 2) randomized.push_back(s);
        }
        if (randomized.size() != 1 || g.reducible) continue;
        const State s1 = randomized.front();
        const auto& w = mixed.at(s1);
        std::vector<Action> used;
        for (Action a = 0; a < w.size(); ++a)
            if (w[a] > 0.0) used.push_back(a);
        if (used.size() != 2) continue;

        PurePolicy first(std::vector<Action>(model.num_states()));
        for (State s = 0; s < first.size(); ++s)
            first[s] = static_cast<Action>(std::max_element(mixed.at(s).begin(), mixed.at(s).end()) - mixed.at(s).begin());
        first[s1] = used[0];
        PurePolicy second = first;
        second[s1] = used[1];
        try {
            const auto e1 = evaluate_policy(model, first);
            const auto e2 = evaluate_policy(model, second);
            const double predicted =
                mixture_reward(e1.gain.value, e2.gain.value, e1.distribution[s1], e2.distribution[s1], w[used[0]]);
            ++report.closed_form_checks;
            report.closed_form_max_error = std::max(report.closed_form_max_error, std::abs(predicted - g.value));
            const double lo = std::min(e1.gain.value, e2.gain.value);
            const double hi = std::max(e1.gain.value, e2.gain.value);
            if (g.value < lo - tol || g.value > hi + tol) ++report.sandwich_violations;
        } catch (const Error& e) {
            if (!e.signals_reducibility()) throw;
        }
    }
    report.pass = report.max_deviation <= tol;
    return report;
}

} // namespace unichain
