#pragma once

#include "unichain/errors.hpp"
#include "unichain/format.hpp"
#include "unichain/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace unichain {

/**
 * Deterministic action-selection rule driven by how often the current state
 * has been visited before. Every emitted action must lie in the declared
 * per-state support; simulate() enforces this.
 */
class Schedule {
public:
    using Rule = std::function<Action(State, std::size_t visits_so_far)>;

    Schedule(std::string name, std::vector<std::vector<Action>> supports, Rule rule)
        : name_(std::move(name)), supports_(std::move(supports)), rule_(std::move(rule)) {
        for (auto& s : supports_) {
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
        }
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::vector<Action>>& supports() const noexcept { return supports_; }
    Action operator()(State s, std::size_t visits_so_far) const { return rule_(s, visits_so_far); }

private:
    std::string name_;
    std::vector<std::vector<Action>> supports_;
    Rule rule_;
};

inline Schedule stationary_schedule(const PurePolicy& policy) {
    std::vector<std::vector<Action>> supports;
    for (Action a : policy.actions) supports.push_back({a});
    return Schedule("stationary" + to_string(policy), std::move(supports),
                    [policy](State s, std::size_t) { return policy[s]; });
}

/**
 * Visits 1, 2-3, 4-7, 8-15, ... of each state alternate between the two
 * policies' actions, so the per-state action frequencies keep oscillating
 * and never converge.
 */
inline Schedule alternating_blocks_schedule(const PurePolicy& first, const PurePolicy& second) {
    if (first.size() != second.size()) throw Error(ErrorCode::invalid_policy, "policies have different lengths");
    std::vector<std::vector<Action>> supports;
    for (State s = 0; s < first.size(); ++s) supports.push_back({first[s], second[s]});
    return Schedule("blocks" + to_string(first) + to_string(second), std::move(supports),
                    [first, second](State s, std::size_t visits) {
                        const int block = std::bit_width(visits + 1) - 1;
                        return block % 2 == 0 ? first[s] : second[s];
                    });
}

/// Cycles through each state's support in order.
inline Schedule round_robin_schedule(std::vector<std::vector<Action>> supports) {
    auto copy = supports;
    for (auto& s : copy) std::sort(s.begin(), s.end());
    return Schedule("round-robin", std::move(supports),
                    [copy](State s, std::size_t visits) { return copy[s][visits % copy[s].size()]; });
}

struct Snapshot {
    std::size_t step = 0;
    double running_average = 0.0;
    std::vector<std::size_t> visits;
};

struct TrajectoryStats {
    std::size_t steps = 0;
    double total_reward = 0.0;
    double running_average = 0.0;
    std::vector<std::size_t> visits;                     ///< per state
    std::vector<std::vector<std::size_t>> action_counts; ///< [state][action]
    std::uint64_t seed = 0;
    std::vector<Snapshot> snapshots;

    /// Relative frequency of each action among the visits to s (all zero if unvisited).
    std::vector<double> frequencies(State s) const {
        std::vector<double> f(action_counts[s].size(), 0.0);
        if (visits[s] == 0) return f;
        for (std::size_t a = 0; a < f.size(); ++a)
            f[a] = static_cast<double>(action_counts[s][a]) / static_cast<double>(visits[s]);
        return f;
    }

    friend bool operator==(const TrajectoryStats& x, const TrajectoryStats& y) {
        auto same = [](const std::vector<Snapshot>& a, const std::vector<Snapshot>& b) {
            if (a.size() != b.size()) return false;
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i].step != b[i].step || a[i].running_average != b[i].running_average || a[i].visits != b[i].visits)
                    return false;
            return true;
        };
        return x.steps == y.steps && x.total_reward == y.total_reward && x.running_average == y.running_average &&
               x.visits == y.visits && x.action_counts == y.action_counts && x.seed == y.seed &&
               same(x.snapshots, y.snapshots);
    }
};

/// Snapshot steps ceil(10^(k/4)) for k = 0, 1, ... up to `steps`, deduplicated.
inline std::vector<std::size_t> checkpoint_steps(std::size_t steps) {
    std::vector<std::size_t> out;
    for (int k = 0;; ++k) {
        const double t = std::ceil(std::pow(10.0, k / 4.0) - 1e-9);
        if (t > static_cast<double>(steps)) break;
        const auto step = static_cast<std::size_t>(t);
        if (out.empty() || out.back() != step) out.push_back(step);
    }
    return out;
}

using RewardNoise = std::function<double(std::mt19937_64&)>;

/**
 * Simulates `steps` transitions from μ₀ (uniform if absent). Payoffs are the
 * mean rewards unless a noise hook is supplied. Random draws use the top 53
 * bits of mt19937_64 so trajectories are bit-identical across standard
 * libraries.
 */
inline TrajectoryStats simulate(const MdpModel& model, const Schedule& schedule, std::size_t steps,
                                std::uint64_t seed, const RewardNoise& noise = {}) {
    const std::size_t n = model.num_states();
    if (schedule.supports().size() != n)
        throw Error(ErrorCode::invalid_policy, "schedule supports do not match the number of states");
    std::vector<std::vector<char>> allowed(n, std::vector<char>(model.num_actions(), 0));
    for (State s = 0; s < n; ++s)
        for (Action a : schedule.supports()[s]) {
            if (a >= model.num_actions()) throw Error(ErrorCode::invalid_policy, "support action out of range");
            allowed[s][a] = 1;
        }

    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    auto draw = [&](std::span<const double> probs) {
        const double u = unit();
        double acc = 0.0;
        for (std::size_t j = 0; j < probs.size(); ++j) {
            acc += probs[j];
            if (u < acc) return j;
        }
        // rounding left u above the cumulative sum: take the last state with positive mass
        for (std::size_t j = probs.size(); j-- > 0;)
            if (probs[j] > 0.0) return j;
        return probs.size() - 1;
    };

    TrajectoryStats stats;
    stats.seed = seed;
    stats.visits.assign(n, 0);
    stats.action_counts.assign(n, std::vector<std::size_t>(model.num_actions(), 0));
    const std::vector<std::size_t> checkpoints = checkpoint_steps(steps);
    std::size_t next_checkpoint = 0;

    std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    State state = draw(model.initial() ? std::span<const double>(*model.initial()) : std::span<const double>(uniform));
    for (std::size_t t = 1; t <= steps; ++t) {
        const Action a = schedule(state, stats.visits[state]);
        if (a >= model.num_actions() || !allowed[state][a])
            throw Error(ErrorCode::invalid_policy, "schedule '" + schedule.name() + "' left its declared support at state " +
                                                       std::to_string(state));
        ++stats.visits[state];
        ++stats.action_counts[state][a];
        stats.total_reward += model.reward(a, state) + (noise ? noise(rng) : 0.0);
        state = draw(model.row(a, state));
        if (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == t) {
            stats.snapshots.push_back({t, stats.total_reward / static_cast<double>(t), stats.visits});
            ++next_checkpoint;
        }
    }
    stats.steps = steps;
    stats.running_average = steps == 0 ? 0.0 : stats.total_reward / static_cast<double>(steps);
    return stats;
}

/// Comma-delimited rows: step, running_average, visits_0 .. visits_{n-1}.
inline void write_snapshots(std::ostream& out, const TrajectoryStats& stats) {
    out << "step,running_average";
    for (std::size_t s = 0; s < stats.visits.size(); ++s) out << ",visits_" << s;
    out << '\n';
    for (const auto& snap : stats.snapshots) {
        out << snap.step << ',' << format_double(snap.running_average);
        for (auto v : snap.visits) out << ',' << v;
        out << '\n';
    }
}

} // namespace unichain
