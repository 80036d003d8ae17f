#pragma once

#include "unichain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace unichain {

using State = std::size_t;
using Action = std::size_t;

/// Tolerance for "is a probability vector" checks on input data.
inline constexpr double probability_tolerance = 1e-12;

namespace detail {

inline double row_sum_slack(std::size_t length) {
    return probability_tolerance + 4.0 * static_cast<double>(length) * std::numeric_limits<double>::epsilon();
}

} // namespace detail

/// Deterministic stationary policy: one action per state.
struct PurePolicy {
    std::vector<Action> actions;

    PurePolicy() = default;
    explicit PurePolicy(std::vector<Action> a) : actions(std::move(a)) {}
    PurePolicy(std::initializer_list<Action> a) : actions(a) {}

    std::size_t size() const noexcept { return actions.size(); }
    Action operator[](State s) const { return actions[s]; }
    Action& operator[](State s) { return actions[s]; }

    friend bool operator==(const PurePolicy&, const PurePolicy&) = default;
    friend auto operator<=>(const PurePolicy&, const PurePolicy&) = default;
};

inline std::string to_string(const PurePolicy& policy) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < policy.size(); ++i) {
        if (i > 0) out << ',';
        out << policy[i];
    }
    out << ')';
    return out.str();
}

/// Square row-stochastic matrix, stored row-major.
class TransitionMatrix {
public:
    TransitionMatrix() = default;

    TransitionMatrix(std::size_t size, std::vector<double> entries)
        : size_(size), entries_(std::move(entries)) {
        if (entries_.size() != size_ * size_)
            throw Error(ErrorCode::invalid_model, "transition matrix data does not match its size");
        for (State i = 0; i < size_; ++i) {
            double sum = 0.0;
            for (double p : row(i)) {
                if (!(p >= 0.0 && p <= 1.0 + detail::row_sum_slack(size_)))
                    throw Error(ErrorCode::invalid_model, "transition entry outside [0,1] in row " + std::to_string(i));
                sum += p;
            }
            if (std::abs(sum - 1.0) > detail::row_sum_slack(size_))
                throw Error(ErrorCode::invalid_model, "row " + std::to_string(i) + " does not sum to 1");
        }
    }

    explicit TransitionMatrix(const std::vector<std::vector<double>>& rows)
        : TransitionMatrix(rows.size(), flatten(rows)) {}

    std::size_t size() const noexcept { return size_; }
    double operator()(State from, State to) const { return entries_[from * size_ + to]; }
    std::span<const double> row(State from) const {
        return std::span<const double>(entries_).subspan(from * size_, size_);
    }
    std::span<const double> data() const noexcept { return entries_; }

    friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

private:
    static std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
        std::vector<double> out;
        out.reserve(rows.size() * rows.size());
        for (const auto& r : rows) {
            if (r.size() != rows.size())
                throw Error(ErrorCode::invalid_model, "transition matrix is not square");
            out.insert(out.end(), r.begin(), r.end());
        }
        return out;
    }

    std::size_t size_ = 0;
    std::vector<double> entries_;
};

/**
 * Finite MDP with a uniform action set.
 *
 * Transitions are indexed [action][from][to], rewards [action][state] and hold
 * mean payoffs only. The constructor checks shapes; the probabilistic
 * invariants are reported by validate_mdp so that malformed inputs can be
 * inspected rather than rejected outright.
 */
class MdpModel {
public:
    using Transitions = std::vector<std::vector<std::vector<double>>>;
    using Rewards = std::vector<std::vector<double>>;

    MdpModel(const Transitions& transitions, const Rewards& rewards,
             std::optional<std::vector<double>> initial = std::nullopt, std::string name = {})
        : initial_(std::move(initial)), name_(std::move(name)) {
        num_actions_ = transitions.size();
        num_states_ = num_actions_ == 0 ? 0 : transitions.front().size();
        if (num_actions_ == 0 || num_states_ == 0)
            throw Error(ErrorCode::invalid_model, "model needs at least one state and one action");
        transitions_.reserve(num_actions_ * num_states_ * num_states_);
        for (Action a = 0; a < num_actions_; ++a) {
            if (transitions[a].size() != num_states_)
                throw Error(ErrorCode::invalid_model, "transitions[" + std::to_string(a) + "] has wrong number of rows");
            for (State i = 0; i < num_states_; ++i) {
                if (transitions[a][i].size() != num_states_)
                    throw Error(ErrorCode::invalid_model,
                                "transitions[" + std::to_string(a) + "][" + std::to_string(i) + "] has wrong length");
                transitions_.insert(transitions_.end(), transitions[a][i].begin(), transitions[a][i].end());
            }
        }
        if (rewards.size() != num_actions_)
            throw Error(ErrorCode::invalid_model, "rewards must have one row per action");
        rewards_.reserve(num_actions_ * num_states_);
        for (Action a = 0; a < num_actions_; ++a) {
            if (rewards[a].size() != num_states_)
                throw Error(ErrorCode::invalid_model, "rewards[" + std::to_string(a) + "] has wrong length");
            rewards_.insert(rewards_.end(), rewards[a].begin(), rewards[a].end());
        }
        if (initial_ && initial_->size() != num_states_)
            throw Error(ErrorCode::invalid_model, "initial distribution has wrong length");
    }

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }

    double transition(Action a, State from, State to) const {
        return transitions_[(a * num_states_ + from) * num_states_ + to];
    }
    std::span<const double> row(Action a, State from) const {
        return std::span<const double>(transitions_).subspan((a * num_states_ + from) * num_states_, num_states_);
    }
    double reward(Action a, State s) const { return rewards_[a * num_states_ + s]; }

    const std::optional<std::vector<double>>& initial() const noexcept { return initial_; }
    const std::string& name() const noexcept { return name_; }

    Transitions transitions() const {
        Transitions out(num_actions_, std::vector<std::vector<double>>(num_states_));
        for (Action a = 0; a < num_actions_; ++a)
            for (State i = 0; i < num_states_; ++i) out[a][i].assign(row(a, i).begin(), row(a, i).end());
        return out;
    }
    Rewards rewards() const {
        Rewards out(num_actions_);
        for (Action a = 0; a < num_actions_; ++a)
            out[a].assign(rewards_.begin() + static_cast<std::ptrdiff_t>(a * num_states_),
                          rewards_.begin() + static_cast<std::ptrdiff_t>((a + 1) * num_states_));
        return out;
    }

    friend bool operator==(const MdpModel&, const MdpModel&) = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
    std::optional<std::vector<double>> initial_;
    std::string name_;
};

/// Randomized stationary policy: a probability vector over actions per state.
class MixedPolicy {
public:
    explicit MixedPolicy(std::vector<std::vector<double>> weights) : weights_(std::move(weights)) {
        for (State s = 0; s < weights_.size(); ++s) {
            double sum = 0.0;
            for (double w : weights_[s]) {
                if (!(w >= 0.0))
                    throw Error(ErrorCode::invalid_policy, "negative weight at state " + std::to_string(s));
                sum += w;
            }
            if (std::abs(sum - 1.0) > detail::row_sum_slack(weights_[s].size()))
                throw Error(ErrorCode::invalid_policy, "weights at state " + std::to_string(s) + " do not sum to 1");
        }
    }

    static MixedPolicy point_mass(const PurePolicy& policy, std::size_t num_actions) {
        std::vector<std::vector<double>> w(policy.size(), std::vector<double>(num_actions, 0.0));
        for (State s = 0; s < policy.size(); ++s) {
            if (policy[s] >= num_actions)
                throw Error(ErrorCode::invalid_policy, "action index out of range", policy.actions);
            w[s][policy[s]] = 1.0;
        }
        return MixedPolicy(std::move(w));
    }

    std::size_t size() const noexcept { return weights_.size(); }
    const std::vector<double>& at(State s) const { return weights_[s]; }
    const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }

    friend bool operator==(const MixedPolicy&, const MixedPolicy&) = default;

private:
    std::vector<std::vector<double>> weights_;
};

struct Violation {
    std::string path; ///< e.g. "transitions[1][0]"
    std::string message;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_mdp(const MdpModel& model) {
    ValidationReport report;
    const std::size_t n = model.num_states();
    for (Action a = 0; a < model.num_actions(); ++a) {
        for (State i = 0; i < n; ++i) {
            const std::string path = "transitions[" + std::to_string(a) + "][" + std::to_string(i) + "]";
            double sum = 0.0;
            bool bad_entry = false;
            for (double p : model.row(a, i)) {
                if (!std::isfinite(p) || p < 0.0) bad_entry = true;
                sum += p;
            }
            if (bad_entry) {
                report.push_back({path, "row has a negative or non-finite entry"});
            } else if (std::abs(sum - 1.0) > probability_tolerance) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "row sums to " << sum << ", expected 1";
                report.push_back({path, msg.str()});
            }
        }
        for (State i = 0; i < n; ++i) {
            if (!std::isfinite(model.reward(a, i)))
                report.push_back({"rewards[" + std::to_string(a) + "][" + std::to_string(i) + "]", "reward is not finite"});
        }
    }
    if (const auto& init = model.initial()) {
        double sum = 0.0;
        bool bad_entry = false;
        for (double p : *init) {
            if (!std::isfinite(p) || p < 0.0) bad_entry = true;
            sum += p;
        }
        if (bad_entry)
            report.push_back({"initial", "negative or non-finite entry"});
        else if (std::abs(sum - 1.0) > probability_tolerance)
            report.push_back({"initial", "initial distribution does not sum to 1"});
    }
    return report;
}

inline void check_policy(const MdpModel& model, const PurePolicy& policy) {
    if (policy.size() != model.num_states())
        throw Error(ErrorCode::invalid_policy, "policy length does not match the number of states", policy.actions);
    for (Action a : policy.actions)
        if (a >= model.num_actions())
            throw Error(ErrorCode::invalid_policy, "action index out of range", policy.actions);
}

inline void check_policy(const MdpModel& model, const MixedPolicy& policy) {
    if (policy.size() != model.num_states())
        throw Error(ErrorCode::invalid_policy, "mixed policy length does not match the number of states");
    for (State s = 0; s < policy.size(); ++s)
        if (policy.at(s).size() != model.num_actions())
            throw Error(ErrorCode::invalid_policy, "mixed policy at state " + std::to_string(s) + " has wrong arity");
}

/// Row i is the transition row of action policy[i] at state i, copied verbatim.
inline TransitionMatrix induced_chain(const MdpModel& model, const PurePolicy& policy) {
    check_policy(model, policy);
    const std::size_t n = model.num_states();
    std::vector<double> entries;
    entries.reserve(n * n);
    for (State i = 0; i < n; ++i) {
        auto r = model.row(policy[i], i);
        entries.insert(entries.end(), r.begin(), r.end());
    }
    return TransitionMatrix(n, std::move(entries));
}

/// Per-state rewards r_{policy(i)}(i).
inline std::vector<double> induced_rewards(const MdpModel& model, const PurePolicy& policy) {
    check_policy(model, policy);
    std::vector<double> r(model.num_states());
    for (State i = 0; i < r.size(); ++i) r[i] = model.reward(policy[i], i);
    return r;
}

struct MixedChain {
    TransitionMatrix chain;
    std::vector<double> rewards;
};

/// Each randomized decision acts as a new action: rows and rewards are weight-averaged.
inline MixedChain induced_mixed_chain(const MdpModel& model, const MixedPolicy& policy) {
    check_policy(model, policy);
    const std::size_t n = model.num_states();
    std::vector<double> entries(n * n, 0.0);
    std::vector<double> rewards(n, 0.0);
    for (State i = 0; i < n; ++i) {
        const auto& w = policy.at(i);
        for (Action a = 0; a < model.num_actions(); ++a) {
            if (w[a] == 0.0) continue;
            if (w[a] == 1.0) {
                auto r = model.row(a, i);
                std::copy(r.begin(), r.end(), entries.begin() + static_cast<std::ptrdiff_t>(i * n));
                rewards[i] = model.reward(a, i);
                continue;
            }
            auto r = model.row(a, i);
            for (State j = 0; j < n; ++j) entries[i * n + j] += w[a] * r[j];
            rewards[i] += w[a] * model.reward(a, i);
        }
    }
    return {TransitionMatrix(n, std::move(entries)), std::move(rewards)};
}

/// Strong connectivity of the graph with edges {(i,j) : p(i,j) > eps}.
inline bool is_irreducible(const TransitionMatrix& chain, double eps = 0.0) {
    const std::size_t n = chain.size();
    if (n == 0) return false;
    auto reaches_all = [&](bool reverse) {
        std::vector<char> seen(n, 0);
        std::vector<State> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            State u = stack.back();
            stack.pop_back();
            for (State v = 0; v < n; ++v) {
                double p = reverse ? chain(v, u) : chain(u, v);
                if (p > eps && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

/// num_actions^num_states, saturating at SIZE_MAX.
inline std::size_t policy_count(const MdpModel& model) {
    std::size_t count = 1;
    for (State s = 0; s < model.num_states(); ++s) {
        if (count > std::numeric_limits<std::size_t>::max() / model.num_actions())
            return std::numeric_limits<std::size_t>::max();
        count *= model.num_actions();
    }
    return count;
}

/// All pure policies in lexicographic order of the action vector (last state varies fastest).
class PolicyRange {
public:
    class iterator {
    public:
        using value_type = PurePolicy;
        using difference_type = std::ptrdiff_t;
        using reference = const PurePolicy&;
        using pointer = const PurePolicy*;
        using iterator_category = std::input_iterator_tag;

        iterator() = default;
        iterator(std::size_t num_states, std::size_t num_actions)
            : num_actions_(num_actions), current_(std::vector<Action>(num_states, 0)), done_(false) {}

        reference operator*() const { return current_; }
        pointer operator->() const { return &current_; }

        iterator& operator++() {
            for (std::size_t k = current_.size(); k-- > 0;) {
                if (++current_[k] < num_actions_) return *this;
                current_[k] = 0;
            }
            done_ = true;
            return *this;
        }
        void operator++(int) { ++*this; }

        friend bool operator==(const iterator& it, std::default_sentinel_t) { return it.done_; }

    private:
        std::size_t num_actions_ = 0;
        PurePolicy current_;
        bool done_ = true;
    };

    PolicyRange(std::size_t num_states, std::size_t num_actions)
        : num_states_(num_states), num_actions_(num_actions) {}

    iterator begin() const { return iterator(num_states_, num_actions_); }
    std::default_sentinel_t end() const { return {}; }

private:
    std::size_t num_states_;
    std::size_t num_actions_;
};

inline PolicyRange enumerate_policies(const MdpModel& model) {
    return PolicyRange(model.num_states(), model.num_actions());
}

struct UnichainVerdict {
    bool unichain = true;
    std::optional<PurePolicy> witness; ///< first policy whose chain is reducible
    std::size_t policies_checked = 0;
};

/// Exhaustive unichain check; throws policy_space_too_large when |A|^|S| > max_policies.
inline UnichainVerdict check_unichain_exhaustive(const MdpModel& model, std::size_t max_policies, double eps = 0.0) {
    if (policy_count(model) > max_policies)
        throw Error(ErrorCode::policy_space_too_large,
                    "policy space exceeds " + std::to_string(max_policies) + " policies");
    UnichainVerdict verdict;
    for (const PurePolicy& policy : enumerate_policies(model)) {
        ++verdict.policies_checked;
        if (!is_irreducible(induced_chain(model, policy), eps)) {
            verdict.unichain = false;
            verdict.witness = policy;
            return verdict;
        }
    }
    return verdict;
}

} // namespace unichain
