#pragma once

#include "unichain/errors.hpp"
#include "unichain/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unichain {

inline constexpr double default_solve_tolerance = 1e-10;
inline constexpr double default_equality_tolerance = 1e-8;
inline constexpr std::size_t default_cesaro_horizon = 1'000'000;

/// Strictly positive probability vector, invariant for the chain it was computed from.
class StationaryDistribution {
public:
    explicit StationaryDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p > 0.0))
                throw Error(ErrorCode::non_positive_entry, "stationary distribution must be strictly positive");
            sum += p;
        }
        if (probs_.empty() || std::abs(sum - 1.0) > 1e-10)
            throw Error(ErrorCode::invalid_model, "stationary distribution must sum to 1");
    }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](State s) const { return probs_[s]; }
    const std::vector<double>& probs() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

/// ||mu P - mu||_inf
inline double invariance_residual(std::span<const double> mu, const TransitionMatrix& chain) {
    const std::size_t n = chain.size();
    double worst = 0.0;
    for (State j = 0; j < n; ++j) {
        double acc = 0.0;
        for (State i = 0; i < n; ++i) acc += mu[i] * chain(i, j);
        worst = std::max(worst, std::abs(acc - mu[j]));
    }
    return worst;
}

/**
 * Invariant distribution of an irreducible chain.
 *
 * Solves (P^T - I) mu = 0 with the last equation replaced by sum(mu) = 1.
 * A rank-deficient system or an entry <= tol * |S| means the chain has more
 * than one closed class or transient states; both are reported, never
 * regularized away.
 */
inline StationaryDistribution stationary_distribution(const TransitionMatrix& chain,
                                                      double tol = default_solve_tolerance) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    Eigen::MatrixXd system(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            system(j, i) = chain(static_cast<State>(i), static_cast<State>(j)) - (i == j ? 1.0 : 0.0);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw Error(ErrorCode::singular_system, "stationary system is singular; chain is reducible");
    Eigen::VectorXd solution = lu.solve(rhs);

    std::vector<double> mu(solution.data(), solution.data() + n);
    const double floor = tol * static_cast<double>(n);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!(mu[i] > floor))
            throw Error(ErrorCode::non_positive_entry,
                        "stationary mass at state " + std::to_string(i) + " is not positive; chain is reducible");
    const double sum = std::accumulate(mu.begin(), mu.end(), 0.0);
    for (double& p : mu) p /= sum;
    const double residual = invariance_residual(mu, chain);
    if (residual > tol)
        throw Error(ErrorCode::residual_too_large, "stationary residual " + std::to_string(residual) + " exceeds tolerance");
    return StationaryDistribution(std::move(mu));
}

enum class GainMethod { direct_solve, closed_form, cesaro, simulation };

inline std::string_view to_string(GainMethod m) {
    switch (m) {
    case GainMethod::direct_solve: return "direct-solve";
    case GainMethod::closed_form: return "closed-form";
    case GainMethod::cesaro: return "cesaro";
    case GainMethod::simulation: return "simulation";
    }
    return "unknown";
}

struct GainReport {
    double value = 0.0;
    GainMethod method = GainMethod::direct_solve;
    double residual = 0.0;
    bool converged = true;
    std::size_t steps = 0; ///< averaging steps used (Cesàro only)
};

struct PolicyEvaluation {
    StationaryDistribution distribution;
    GainReport gain;
};

inline double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

inline PolicyEvaluation evaluate_chain(const TransitionMatrix& chain, std::span<const double> rewards,
                                       double tol = default_solve_tolerance) {
    StationaryDistribution mu = stationary_distribution(chain, tol);
    GainReport report{dot(mu.probs(), rewards), GainMethod::direct_solve, invariance_residual(mu.probs(), chain)};
    return {std::move(mu), report};
}

inline PolicyEvaluation evaluate_policy(const MdpModel& model, const PurePolicy& policy,
                                        double tol = default_solve_tolerance) {
    try {
        return evaluate_chain(induced_chain(model, policy), induced_rewards(model, policy), tol);
    } catch (const Error& e) {
        if (e.signals_reducibility()) throw Error(e.code(), e.detail(), policy.actions);
        throw;
    }
}

/// Long-run average reward sum_i mu(i) r_{policy(i)}(i) via a direct solve.
inline GainReport average_reward(const MdpModel& model, const PurePolicy& policy,
                                 double tol = default_solve_tolerance) {
    return evaluate_policy(model, policy, tol).gain;
}

inline PolicyEvaluation evaluate_mixed_policy(const MdpModel& model, const MixedPolicy& policy,
                                              double tol = default_solve_tolerance) {
    MixedChain mixed = induced_mixed_chain(model, policy);
    return evaluate_chain(mixed.chain, mixed.rewards, tol);
}

inline GainReport mixed_average_reward(const MdpModel& model, const MixedPolicy& policy,
                                       double tol = default_solve_tolerance) {
    return evaluate_mixed_policy(model, policy, tol).gain;
}

/**
 * Cesàro-limit gain of a possibly reducible chain started from `start`.
 *
 * With A_n the mean expected reward over steps [0, n), the estimate at
 * checkpoint n = 2^k is 2 A_{2n} - A_n, i.e. the mean over steps [n, 2n).
 * It has the same limit as A_n but cancels the O(1/n) transient term.
 * Iteration stops once two successive checkpoint estimates (windows of at
 * least four steps) differ by less than tol, or when the horizon is spent.
 */
inline GainReport cesaro_chain_gain(const TransitionMatrix& chain, std::span<const double> rewards,
                                    std::span<const double> start, std::size_t horizon = default_cesaro_horizon,
                                    double tol = default_solve_tolerance) {
    const std::size_t n = chain.size();
    if (start.size() != n)
        throw Error(ErrorCode::invalid_model, "start distribution has wrong length");
    {
        double sum = 0.0;
        for (double p : start) {
            if (!(p >= 0.0)) throw Error(ErrorCode::invalid_model, "start distribution has a negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > detail::row_sum_slack(n))
            throw Error(ErrorCode::invalid_model, "start distribution does not sum to 1");
    }

    std::vector<double> x(start.begin(), start.end());
    std::vector<double> next(n);
    auto advance = [&] {
        std::fill(next.begin(), next.end(), 0.0);
        for (State i = 0; i < n; ++i) {
            if (x[i] == 0.0) continue;
            for (State j = 0; j < n; ++j) next[j] += x[i] * chain(i, j);
        }
        x.swap(next);
    };

    GainReport report{0.0, GainMethod::cesaro, std::numeric_limits<double>::infinity(), false, 0};
    advance();
    std::size_t t = 1;
    double previous = 0.0;
    bool have_previous = false;
    for (std::size_t window = 1; t + window <= horizon || !have_previous; window *= 2) {
        double acc = 0.0;
        for (std::size_t k = 0; k < window; ++k) {
            acc += dot(x, rewards);
            advance();
            ++t;
        }
        const double estimate = acc / static_cast<double>(window);
        if (have_previous) {
            report.residual = std::abs(estimate - previous);
            if (window >= 4 && report.residual < tol) {
                report.value = estimate;
                report.converged = true;
                report.steps = t;
                return report;
            }
        }
        previous = estimate;
        have_previous = true;
        report.value = estimate;
    }
    report.steps = t;
    return report;
}

inline std::vector<double> default_start(const MdpModel& model) {
    if (model.initial()) return *model.initial();
    return std::vector<double>(model.num_states(), 1.0 / static_cast<double>(model.num_states()));
}

inline GainReport cesaro_gain(const MdpModel& model, const PurePolicy& policy, std::span<const double> start,
                              std::size_t horizon = default_cesaro_horizon, double tol = default_solve_tolerance) {
    return cesaro_chain_gain(induced_chain(model, policy), induced_rewards(model, policy), start, horizon, tol);
}

} // namespace unichain
