// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include "run_cli.hpp"

#include "unichain/unichain.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace unichain;
using unichain::oracle::run_cli;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %-40s %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("unichain_acceptance_" + name)).string();
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

/// Instances shared by the closure and solver criteria: 3-5 states, 2-3 actions, min_prob 0.05.
/// seed % n states get planted ties so the suite also exercises large optimal sets.
std::vector<MdpModel> closure_instances() {
    std::vector<MdpModel> out;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::size_t n = 3 + seed % 3;
        const std::size_t m = 2 + (seed / 3) % 2;
        out.push_back(plant_optimal_ties(random_unichain_instance(n, m, 0.05, {0.0, 1.0}, seed), seed % n, 0.05, seed));
    }
    return out;
}

struct TiedInstance {
    MdpModel model;
    OptimalSet optimal;
};

/// Re-seeds until the instance has at least two optimal policies.
TiedInstance tied_instance(std::uint64_t& seed, std::size_t n, std::size_t m) {
    for (;; ++seed) {
        auto model = plant_optimal_ties(random_unichain_instance(n, m, 0.05, {0.0, 1.0}, seed), 1 + seed % n, 0.05, seed);
        auto optimal = brute_force_optimal_set(model);
        if (optimal.policies.size() >= 2) return {std::move(model), std::move(optimal)};
    }
}

double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
    return d;
}

PurePolicy random_policy(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    PurePolicy p{std::vector<Action>(n)};
    for (auto& a : p.actions) a = rng() % m;
    return p;
}

} // namespace

int main() {
    const auto instances = closure_instances();

    criterion(1, "eval on the equal-transitions fixture", [] {
        const auto report = temp_path("c1.json");
        const auto run = run_cli("--report " + report + " eval fixture:example-4-1 --policy '1,1;0,1;1,0;0,0'");
        if (run.exit_code != 0) return Verdict{false, "exit code " + std::to_string(run.exit_code)};
        const auto results = read_json(report)["report"]["results"];
        const double expected[] = {1.0, 0.5, 0.5, 0.0};
        double err = 0.0;
        std::ostringstream values;
        for (std::size_t k = 0; k < 4; ++k) {
            const double v = results[k]["gain"]["value"].get<double>();
            err = std::max(err, std::abs(v - expected[k]));
            values << (k ? ", " : "") << format_double(v);
        }
        return Verdict{err <= 1e-9, "V(1,1),V(0,1),V(1,0),V(0,0) = " + values.str() + "; max err " + sci(err)};
    });

    criterion(2, "multichain fixture: witness and Cesaro", [] {
        const auto m = multichain_fixture();
        const auto verdict = check_unichain_exhaustive(m, 16);
        const bool witness_ok = !verdict.unichain && verdict.witness && *verdict.witness == PurePolicy{0, 0};
        const std::vector<std::pair<PurePolicy, double>> cases{{{0, 0}, 1.0}, {{0, 1}, 1.0}, {{1, 0}, 1.0}, {{1, 1}, 0.0}};
        double err = 0.0;
        bool converged = true;
        for (const auto& start : {std::vector<double>{0.5, 0.5}, {1.0, 0.0}, {0.0, 1.0}, {0.3, 0.7}})
            for (const auto& [p, v] : cases) {
                const auto g = cesaro_gain(m, p, start);
                converged = converged && g.converged;
                err = std::max(err, std::abs(g.value - v));
            }
        return Verdict{witness_ok && converged && err <= 1e-6,
                       std::string("unichain=") + (verdict.unichain ? "true" : "false") + " witness=" +
                           (verdict.witness ? to_string(*verdict.witness) : "none") + "; Cesaro max err " + sci(err) +
                           " over 4 starts"};
    });

    criterion(3, "combination closure, 200 instances", [&] {
        double worst = 0.0;
        std::size_t failed = 0, multi = 0, combos = 0;
        for (const auto& m : instances) {
            const auto set = brute_force_optimal_set(m, 1e-8);
            if (set.policies.size() >= 2) ++multi;
            const auto r = verify_combination_closure(m, set);
            worst = std::max(worst, r.max_deviation);
            combos += r.combinations_tested;
            if (!r.pass || !r.reducible.empty()) ++failed;
        }
        return Verdict{failed == 0 && worst <= 1e-8,
                       std::to_string(failed) + " failures; " + std::to_string(multi) + " instances with >=2 optimal; " +
                           std::to_string(combos) + " combinations; max |V-V*| " + sci(worst)};
    });

    criterion(4, "four-policy closed form, 1000 squares", [] {
        std::mt19937_64 rng(2024);
        double worst = 0.0;
        std::size_t fallbacks = 0;
        for (std::uint64_t k = 0; k < 1000; ++k) {
            const std::size_t n = 3 + k % 4;
            const std::size_t m = 2 + k % 2;
            const auto model = random_unichain_instance(n, m, 0.02, {0.0, 1.0}, 10'000 + k);
            const auto base = random_policy(n, m, rng);
            const State s1 = rng() % n;
            const State s2 = (s1 + 1 + rng() % (n - 1)) % n;
            const Action alt1 = (base[s1] + 1 + rng() % (m - 1)) % m;
            const Action alt2 = (base[s2] + 1 + rng() % (m - 1)) % m;
            const auto sq = make_switch_square(base, s1, alt1, s2, alt2);
            const auto a = evaluate_policy(model, sq.at(0, 0)).distribution;
            const auto b = evaluate_policy(model, sq.at(0, 1)).distribution;
            const auto c = evaluate_policy(model, sq.at(1, 0)).distribution;
            const auto d = evaluate_policy(model, sq.at(1, 1)).distribution;
            try {
                const auto got = four_policy_distribution(a, b, c, s1, s2);
                worst = std::max(worst, max_abs_diff(got.probs(), d.probs()));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::degenerate_denominator && e.code() != ErrorCode::non_positive_result) throw;
                ++fallbacks;
            }
        }
        return Verdict{worst <= 1e-10, "max elementwise err " + sci(worst) + "; fallbacks " + std::to_string(fallbacks) + "/1000"};
    });

    criterion(5, "mixture closed forms, 1000 samples", [] {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double dist_err = 0.0, reward_err = 0.0;
        for (std::uint64_t k = 0; k < 1000; ++k) {
            const std::size_t n = 2 + k % 5;
            const std::size_t m = 2 + k % 2;
            const auto model = random_unichain_instance(n, m, 0.2 / static_cast<double>(n), {-1.0, 1.0}, 20'000 + k);
            const auto p1 = random_policy(n, m, rng);
            const State s1 = rng() % n;
            PurePolicy p2 = p1;
            p2[s1] = (p1[s1] + 1 + rng() % (m - 1)) % m;
            const double lambda = unit(rng);
            const auto e1 = evaluate_policy(model, p1);
            const auto e2 = evaluate_policy(model, p2);

            std::vector<std::vector<double>> weights;
            for (State s = 0; s < n; ++s) {
                std::vector<double> w(m, 0.0);
                if (s == s1) {
                    w[p1[s]] = lambda;
                    w[p2[s]] = 1.0 - lambda;
                } else {
                    w[p1[s]] = 1.0;
                }
                weights.push_back(std::move(w));
            }
            const auto direct = evaluate_mixed_policy(model, MixedPolicy(std::move(weights)));
            const auto closed = mixture_distribution(e1.distribution, e2.distribution, s1, lambda);
            dist_err = std::max(dist_err, max_abs_diff(closed.probs(), direct.distribution.probs()));
            const double v = mixture_reward(e1.gain.value, e2.gain.value, e1.distribution[s1], e2.distribution[s1], lambda);
            reward_err = std::max(reward_err, std::abs(v - direct.gain.value));
        }
        return Verdict{dist_err <= 1e-10 && reward_err <= 1e-10,
                       "distribution err " + sci(dist_err) + "; reward err " + sci(reward_err)};
    });

    criterion(6, "four-reward relations, 1000 quadruples", [] {
        std::mt19937_64 rng(606);
        std::size_t violated = 0, tied = 0;
        std::string first;
        for (std::uint64_t k = 0; k < 1000; ++k) {
            const std::size_t n = 3 + k % 3;
            const std::size_t m = 2 + (k / 2) % 2;
            auto model = random_unichain_instance(n, m, 0.05, {0.0, 1.0}, 30'000 + k);
            PurePolicy base = random_policy(n, m, rng);
            const State s1 = rng() % n;
            const State s2 = (s1 + 1 + rng() % (n - 1)) % n;
            if (k % 2 == 1) {
                // every state tied: all four corners share the optimal gain, exercising the equality clauses
                model = plant_optimal_ties(model, n, 0.05, k);
                base = policy_iteration(model).policy;
            }
            Action alt1 = (base[s1] + 1 + rng() % (m - 1)) % m;
            Action alt2 = (base[s2] + 1 + rng() % (m - 1)) % m;
            const auto sq = make_switch_square(base, s1, alt1, s2, alt2);
            double v[2][2];
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y) v[x][y] = average_reward(model, sq.at(x, y)).value;
            if (std::abs(v[0][0] - v[1][1]) <= 1e-8 && std::abs(v[0][1] - v[1][0]) <= 1e-8 &&
                std::abs(v[0][0] - v[0][1]) <= 1e-8)
                ++tied;
            const auto clauses = check_four_reward_relations(v[0][0], v[0][1], v[1][0], v[1][1], 1e-8);
            if (!clauses.empty()) {
                ++violated;
                if (first.empty()) first = " first: " + clauses.front();
            }
        }
        const auto pattern = check_four_reward_relations(1, 0, 0, 1, 1e-8);
        return Verdict{violated == 0 && !pattern.empty(),
                       std::to_string(violated) + " violating quadruples (" + std::to_string(tied) +
                           " all-equal); (1,0,0,1) flags " + std::to_string(pattern.size()) + " clauses" + first};
    });

    criterion(7, "mixtures over optimal supports, 50x100", [] {
        std::uint64_t seed = 40'000;
        double worst = 0.0;
        std::size_t failed = 0, checks = 0;
        for (std::size_t k = 0; k < 50; ++k, ++seed) {
            const auto inst = tied_instance(seed, 3 + k % 3, 2 + k % 2);
            const auto r = verify_mixture_optimality(inst.model, inst.optimal, 100, seed);
            worst = std::max(worst, r.max_deviation);
            checks += r.combinations_tested;
            if (!r.pass) ++failed;
        }
        return Verdict{failed == 0 && checks == 5000 && worst <= 1e-8,
                       std::to_string(checks) + " mixtures; " + std::to_string(failed) + " failing instances; max |V-V*| " +
                           sci(worst)};
    });

    criterion(8, "alternating blocks reach V*, 10 runs", [] {
        std::uint64_t seed = 50'000;
        double worst = 0.0;
        for (std::size_t k = 0; k < 10; ++k, ++seed) {
            const auto inst = tied_instance(seed, 3 + k % 3, 2);
            const auto schedule = alternating_blocks_schedule(inst.optimal.policies.front(), inst.optimal.policies.back());
            const auto stats = simulate(inst.model, schedule, 1'000'000, 8'000 + k);
            worst = std::max(worst, std::abs(stats.running_average - inst.optimal.gain));
        }
        return Verdict{worst <= 5e-3, "max |V_t - V*| at t=1e6: " + sci(worst)};
    });

    criterion(9, "policy iteration vs brute force", [&] {
        double worst = 0.0;
        std::size_t outside = 0, unconverged = 0;
        for (const auto& m : instances) {
            const auto set = brute_force_optimal_set(m, 1e-8);
            const auto r = policy_iteration(m);
            worst = std::max(worst, std::abs(r.gain.value - set.gain));
            if (!set.contains(r.policy)) ++outside;
            if (!r.converged) ++unconverged;
        }
        return Verdict{worst <= 1e-8 && outside == 0 && unconverged == 0,
                       "max gain gap " + sci(worst) + "; policies outside optimal set " + std::to_string(outside) +
                           "; unconverged " + std::to_string(unconverged)};
    });

    criterion(10, "closure counterexamples via CLI", [] {
        const auto r1 = temp_path("c10a.json");
        const auto r2 = temp_path("c10b.json");
        const auto run1 = run_cli("--report " + r1 + " closure fixture:example-4-1 --policies '0,1;1,0'");
        const auto run2 = run_cli("--report " + r2 + " closure fixture:example-4-2 --policies '0,0;0,1;1,0'");
        auto has = [](const nlohmann::json& doc, double value, double gain) {
            const auto& rep = doc["report"];
            if (std::abs(rep["gain"].get<double>() - gain) > 1e-9) return false;
            for (const auto& w : rep["witnesses"])
                if (w["policy"] == nlohmann::json({1, 1}) && std::abs(w["value"].get<double>() - value) <= 1e-6) return true;
            return false;
        };
        const bool ok1 = run1.exit_code == 1 && has(read_json(r1), 1.0, 0.5);
        const bool ok2 = run2.exit_code == 1 && has(read_json(r2), 0.0, 1.0);
        return Verdict{ok1 && ok2, "example-4-1 exit " + std::to_string(run1.exit_code) + (ok1 ? " witness (1,1)=1 vs 0.5" : " bad witness") +
                                       "; example-4-2 exit " + std::to_string(run2.exit_code) +
                                       (ok2 ? " witness (1,1)=0 vs 1" : " bad witness")};
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
