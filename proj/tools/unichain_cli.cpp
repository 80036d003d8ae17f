// unichain: evaluate, solve and verify average-reward unichain MDPs from the command line.

#include "unichain/unichain.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace {

using namespace unichain;
using Json = nlohmann::ordered_json;

enum Exit : int { ok = 0, verification_failed = 1, input_error = 2, not_converged = 3 };

struct Outcome {
    int code = ok;
    Json report = Json::object();
};

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_number(std::string_view text, const char* what) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size())
        throw Error(ErrorCode::parse_error, std::string("bad ") + what + " '" + std::string(text) + "'");
    return value;
}

PurePolicy parse_policy(std::string_view text) {
    PurePolicy p;
    for (const auto& tok : split(text, ',')) p.actions.push_back(parse_number<Action>(tok, "action"));
    return p;
}

std::vector<PurePolicy> parse_policy_list(std::string_view text) {
    std::vector<PurePolicy> out;
    for (const auto& tok : split(text, ';')) out.push_back(parse_policy(tok));
    return out;
}

MixedPolicy parse_weights(std::string_view text) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : split(text, ';')) {
        rows.emplace_back();
        for (const auto& tok : split(row, ',')) rows.back().push_back(parse_number<double>(tok, "weight"));
    }
    return MixedPolicy(std::move(rows));
}

/// "<file>", "fixture:<name>" or "random:<states>,<actions>,<min_prob>,<seed>".
MdpModel load_model(const std::string& spec) {
    if (spec.starts_with("fixture:")) return builtin_fixture(std::string_view(spec).substr(8));
    if (spec.starts_with("random:")) {
        const auto parts = split(std::string_view(spec).substr(7), ',');
        if (parts.size() != 4) throw Error(ErrorCode::parse_error, "random spec is random:<states>,<actions>,<min_prob>,<seed>");
        return random_unichain_instance(parse_number<std::size_t>(parts[0], "state count"),
                                        parse_number<std::size_t>(parts[1], "action count"),
                                        parse_number<double>(parts[2], "min_prob"), {0.0, 1.0},
                                        parse_number<std::uint64_t>(parts[3], "seed"));
    }
    return read_instance_file(spec);
}

Json to_json(const PurePolicy& p) { return Json(p.actions); }

Json to_json(const GainReport& g) {
    Json j;
    j["value"] = g.value;
    j["method"] = std::string(to_string(g.method));
    j["residual"] = g.residual;
    j["converged"] = g.converged;
    if (g.method == GainMethod::cesaro) j["steps"] = g.steps;
    return j;
}

Json to_json(const Witness& w) {
    Json j;
    if (const auto* p = std::get_if<PurePolicy>(&w.policy))
        j["policy"] = to_json(*p);
    else
        j["weights"] = std::get<MixedPolicy>(w.policy).weights();
    j["value"] = w.value;
    j["reducible"] = w.reducible;
    return j;
}

Json to_json(const ClosureReport& r) {
    Json j;
    j["instance"] = r.instance;
    j["gain"] = r.gain;
    j["tolerance"] = r.tolerance;
    j["num_optimal"] = r.num_optimal;
    j["combinations_tested"] = r.combinations_tested;
    j["max_deviation"] = r.max_deviation;
    j["pass"] = r.pass;
    j["witnesses"] = Json::array();
    for (const auto& w : r.witnesses) j["witnesses"].push_back(to_json(w));
    j["reducible"] = Json::array();
    for (const auto& p : r.reducible) j["reducible"].push_back(to_json(p));
    return j;
}

std::string num(double x) { return format_double(x); }

void print_witnesses(const ClosureReport& r) {
    for (const auto& w : r.witnesses)
        std::cout << "  witness " << describe(w) << " value " << num(w.value) << " vs " << num(r.gain)
                  << (w.reducible ? " (reducible, Cesaro limit)" : "") << '\n';
}

Outcome cmd_validate(const MdpModel& m) {
    Outcome out;
    const auto violations = validate_mdp(m);
    out.report["valid"] = violations.empty();
    out.report["violations"] = Json::array();
    for (const auto& v : violations) {
        std::cout << v.path << ": " << v.message << '\n';
        out.report["violations"].push_back({{"path", v.path}, {"message", v.message}});
    }
    if (!violations.empty()) {
        out.code = input_error;
        return out;
    }
    std::cout << "valid: " << m.num_states() << " states, " << m.num_actions() << " actions\n";
    out.report["num_states"] = m.num_states();
    out.report["num_actions"] = m.num_actions();
    if (policy_count(m) <= default_max_policies) {
        const auto verdict = check_unichain_exhaustive(m, default_max_policies);
        out.report["unichain"] = verdict.unichain;
        out.report["policies_checked"] = verdict.policies_checked;
        std::cout << "unichain: " << (verdict.unichain ? "yes" : "no") << " (" << verdict.policies_checked
                  << " policies checked)\n";
        if (verdict.witness) {
            std::cout << "  reducible policy " << to_string(*verdict.witness) << '\n';
            out.report["witness"] = to_json(*verdict.witness);
        }
    } else {
        std::cout << "unichain: not checked (policy space too large)\n";
    }
    return out;
}

Outcome cmd_eval(const MdpModel& m, const std::vector<PurePolicy>& policies) {
    Outcome out;
    out.report["results"] = Json::array();
    for (const auto& p : policies) {
        const RobustGain g = robust_gain(m, p);
        GainReport report;
        if (g.reducible) {
            report = cesaro_gain(m, p, default_start(m));
        } else {
            report = average_reward(m, p);
        }
        std::cout << "V" << to_string(p) << " = " << num(report.value) << "  [" << to_string(report.method) << "]"
                  << (report.converged ? "" : " NOT CONVERGED") << '\n';
        Json j;
        j["policy"] = to_json(p);
        j["gain"] = to_json(report);
        j["reducible"] = g.reducible;
        out.report["results"].push_back(j);
        if (!report.converged) out.code = not_converged;
    }
    return out;
}

Outcome cmd_eval_mixed(const MdpModel& m, const MixedPolicy& policy) {
    Outcome out;
    const MixedChain mc = induced_mixed_chain(m, policy);
    const RobustGain g = robust_gain(mc.chain, mc.rewards, default_start(m));
    std::cout << "V = " << num(g.value) << (g.reducible ? "  [cesaro]" : "  [direct-solve]")
              << (g.converged ? "" : " NOT CONVERGED") << '\n';
    out.report["weights"] = policy.weights();
    out.report["value"] = g.value;
    out.report["reducible"] = g.reducible;
    out.report["converged"] = g.converged;
    if (!g.converged) out.code = not_converged;
    return out;
}

Outcome cmd_solve(const MdpModel& m, const std::string& method, double tol) {
    Outcome out;
    out.report["method"] = method;
    if (method == "pi") {
        const auto r = policy_iteration(m);
        std::cout << "policy iteration: " << to_string(r.policy) << " gain " << num(r.gain.value) << " after "
                  << r.iterations << " iterations" << (r.converged ? "" : " NOT CONVERGED") << '\n';
        out.report["policy"] = to_json(r.policy);
        out.report["gain"] = r.gain.value;
        out.report["bias"] = r.bias;
        out.report["gain_history"] = r.gain_history;
        out.report["iterations"] = r.iterations;
        out.report["converged"] = r.converged;
        if (!r.converged) out.code = not_converged;
        return out;
    }
    const auto set = brute_force_optimal_set(m, tol);
    std::cout << "optimal gain " << num(set.gain) << ", " << set.policies.size() << " optimal of "
              << set.policies_evaluated << " policies (separation " << num(set.separation) << ")\n";
    for (const auto& p : set.policies) std::cout << "  " << to_string(p) << '\n';
    out.report["gain"] = set.gain;
    out.report["tolerance"] = set.tolerance;
    out.report["separation"] = std::isfinite(set.separation) ? Json(set.separation) : Json(nullptr);
    out.report["policies_evaluated"] = set.policies_evaluated;
    out.report["policies"] = Json::array();
    for (const auto& p : set.policies) out.report["policies"].push_back(to_json(p));
    return out;
}

/// Claimed sets are scored against the value of their first member.
OptimalSet claimed_set(const MdpModel& m, std::vector<PurePolicy> policies) {
    OptimalSet set;
    for (const auto& p : policies) check_policy(m, p);
    set.gain = robust_gain(m, policies.front()).value;
    std::sort(policies.begin(), policies.end());
    policies.erase(std::unique(policies.begin(), policies.end()), policies.end());
    set.policies = std::move(policies);
    return set;
}

Outcome cmd_closure(const MdpModel& m, const std::string& policies, double tol, std::uint64_t seed) {
    Outcome out;
    const OptimalSet set = policies.empty() ? brute_force_optimal_set(m, tol) : claimed_set(m, parse_policy_list(policies));
    ClosureOptions options;
    options.tol = tol;
    options.seed = seed;
    const auto r = verify_combination_closure(m, set, options);
    std::cout << "closure over " << r.num_optimal << " policies with gain " << num(r.gain) << ": "
              << r.combinations_tested << " combinations, max deviation " << num(r.max_deviation) << " -> "
              << (r.pass ? "PASS" : "FAIL") << '\n';
    print_witnesses(r);
    out.report = to_json(r);
    out.report["policies"] = Json::array();
    for (const auto& p : set.policies) out.report["policies"].push_back(to_json(p));
    if (!r.pass) out.code = verification_failed;
    return out;
}

Outcome cmd_chain(const MdpModel& m, const PurePolicy& from, const PurePolicy& to, double tol) {
    Outcome out;
    const auto chain = interpolation_chain(m, from, to, tol);
    out.report["policies"] = Json::array();
    for (std::size_t k = 0; k < chain.policies.size(); ++k) {
        std::cout << k << "  " << to_string(chain.policies[k]) << "  " << num(chain.gains[k]) << '\n';
        out.report["policies"].push_back(to_json(chain.policies[k]));
    }
    out.report["gains"] = chain.gains;
    out.report["hypothesis_holds"] = chain.hypothesis_holds;
    out.report["non_increasing"] = chain.non_increasing;
    std::cout << "first step non-improving: " << (chain.hypothesis_holds ? "yes" : "no")
              << ", gains non-increasing: " << (chain.non_increasing ? "yes" : "no") << '\n';
    if (chain.hypothesis_holds && !chain.non_increasing) out.code = verification_failed;
    return out;
}

Outcome cmd_mix_check(const MdpModel& m, std::size_t samples, std::uint64_t seed, double tol) {
    Outcome out;
    const auto set = brute_force_optimal_set(m, tol);
    const auto r = verify_mixture_optimality(m, set, samples, seed, tol);
    std::cout << r.combinations_tested << " mixtures over supports of " << r.num_optimal
              << " optimal policies, max deviation " << num(r.max_deviation) << " -> " << (r.pass ? "PASS" : "FAIL")
              << '\n';
    std::cout << "single-state closed-form checks " << r.closed_form_checks << ", max error "
              << num(r.closed_form_max_error) << ", sandwich violations " << r.sandwich_violations << '\n';
    print_witnesses(r);
    out.report = to_json(r);
    out.report["seed"] = seed;
    out.report["closed_form_checks"] = r.closed_form_checks;
    out.report["closed_form_max_error"] = r.closed_form_max_error;
    out.report["sandwich_violations"] = r.sandwich_violations;
    if (!r.pass || r.sandwich_violations > 0) out.code = verification_failed;
    return out;
}

/// "optimal", "optimal-blocks", "stationary:<policy>", "blocks:<policy>;<policy>" or a bare policy.
Schedule parse_schedule(const MdpModel& m, const std::string& spec) {
    if (spec == "optimal" || spec == "optimal-blocks") {
        const auto set = brute_force_optimal_set(m);
        if (spec == "optimal") return stationary_schedule(set.policies.front());
        return alternating_blocks_schedule(set.policies.front(), set.policies.back());
    }
    if (spec.starts_with("blocks:")) {
        const auto pair = parse_policy_list(std::string_view(spec).substr(7));
        if (pair.size() != 2) throw Error(ErrorCode::parse_error, "blocks schedule needs two policies");
        check_policy(m, pair[0]);
        check_policy(m, pair[1]);
        return alternating_blocks_schedule(pair[0], pair[1]);
    }
    const auto policy = parse_policy(spec.starts_with("stationary:") ? std::string_view(spec).substr(11) : spec);
    check_policy(m, policy);
    return stationary_schedule(policy);
}

Outcome cmd_simulate(const MdpModel& m, const std::string& spec, std::size_t steps, std::uint64_t seed,
                     const std::string& snapshots) {
    Outcome out;
    const Schedule schedule = parse_schedule(m, spec);
    const auto stats = simulate(m, schedule, steps, seed);
    std::cout << schedule.name() << ": " << steps << " steps, running average " << num(stats.running_average) << '\n';
    for (State s = 0; s < m.num_states(); ++s) {
        std::cout << "  state " << s << " visits " << stats.visits[s] << " action frequencies";
        for (double f : stats.frequencies(s)) std::cout << ' ' << num(f);
        std::cout << '\n';
    }
    out.report["schedule"] = schedule.name();
    out.report["steps"] = steps;
    out.report["seed"] = seed;
    out.report["total_reward"] = stats.total_reward;
    out.report["running_average"] = stats.running_average;
    out.report["visits"] = stats.visits;
    out.report["action_counts"] = stats.action_counts;
    if (!snapshots.empty()) {
        std::ofstream file(snapshots);
        if (!file) throw Error(ErrorCode::parse_error, "cannot write '" + snapshots + "'");
        write_snapshots(file, stats);
        std::cout << "snapshots written to " << snapshots << '\n';
    }
    return out;
}

void write_report(const std::string& path, const std::string& command, const Outcome& outcome) {
    if (path.empty()) return;
    Json doc;
    doc["command"] = command;
    doc["exit_code"] = outcome.code;
    doc["report"] = outcome.report;
    std::ofstream file(path);
    if (!file) throw Error(ErrorCode::parse_error, "cannot write report '" + path + "'");
    file << doc.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluate, solve and verify average-reward unichain MDPs"};
    app.require_subcommand(1);
    std::string report_path;
    app.add_option("--report", report_path, "Write a JSON report to this file");

    std::string input, policy, policies, weights, method = "brute", from, to, schedule = "optimal", out_path,
                                                  snapshots, fixture_name;
    double tol = default_equality_tolerance, min_prob = 0.05;
    std::uint64_t seed = 0;
    std::size_t samples = 100, steps = 100'000, states = 3, actions = 2, ties = 0;
    const std::string input_help = "Instance file, fixture:<name> or random:<states>,<actions>,<min_prob>,<seed>";

    auto* validate = app.add_subcommand("validate", "Check an instance and its unichain property");
    validate->add_option("input", input, input_help)->required();

    auto* eval = app.add_subcommand("eval", "Average reward of pure policies");
    eval->add_option("input", input, input_help)->required();
    eval->add_option("--policy", policy, "Comma-separated actions; ';' separates several policies")->required();

    auto* eval_mixed = app.add_subcommand("eval-mixed", "Average reward of a randomized policy");
    eval_mixed->add_option("input", input, input_help)->required();
    eval_mixed->add_option("--weights", weights, "Per-state action weights, e.g. 0.5,0.5;0,1")->required();

    auto* solve = app.add_subcommand("solve", "Optimal gain and policies");
    solve->add_option("input", input, input_help)->required();
    solve->add_option("--method", method)->check(CLI::IsMember({"brute", "pi"}));
    solve->add_option("--tol", tol);

    auto* closure = app.add_subcommand("closure", "Check that combinations of optimal policies stay optimal");
    closure->add_option("input", input, input_help)->required();
    closure->add_option("--tol", tol);
    closure->add_option("--policies", policies, "Claimed set instead of the brute-force optimum, e.g. 0,1;1,0");
    closure->add_option("--seed", seed, "Seed for sampled selectors on large disagreement sets");

    auto* chain = app.add_subcommand("chain", "Greedy single-switch path between two policies");
    chain->add_option("input", input, input_help)->required();
    chain->add_option("--from", from)->required();
    chain->add_option("--to", to)->required();
    chain->add_option("--tol", tol);

    auto* mix = app.add_subcommand("mix-check", "Sample mixtures over optimal supports");
    mix->add_option("input", input, input_help)->required();
    mix->add_option("--samples", samples);
    mix->add_option("--seed", seed);
    mix->add_option("--tol", tol);

    auto* sim = app.add_subcommand("simulate", "Simulate a schedule and report the running average");
    sim->add_option("input", input, input_help)->required();
    sim->add_option("--schedule", schedule, "optimal, optimal-blocks, stationary:<policy> or blocks:<p>;<q>");
    sim->add_option("--steps", steps);
    sim->add_option("--seed", seed);
    sim->add_option("--snapshots", snapshots, "Write running-average checkpoints as CSV");

    auto* gen = app.add_subcommand("gen", "Generate a random unichain instance");
    gen->add_option("--states", states)->required();
    gen->add_option("--actions", actions)->required();
    gen->add_option("--min-prob", min_prob);
    gen->add_option("--seed", seed);
    gen->add_option("--ties", ties, "Plant optimal ties at this many states");
    gen->add_option("--out", out_path)->required();

    auto* fixture = app.add_subcommand("fixture", "Write a built-in instance");
    fixture->add_option("name", fixture_name)->required();
    fixture->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : input_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    Outcome outcome;
    try {
        if (gen->parsed()) {
            auto m = random_unichain_instance(states, actions, min_prob, {0.0, 1.0}, seed);
            if (ties > 0) m = plant_optimal_ties(m, ties, min_prob, seed);
            write_instance_file(out_path, m);
            std::cout << "wrote " << m.name() << " to " << out_path << '\n';
            outcome.report["name"] = m.name();
            outcome.report["out"] = out_path;
        } else if (fixture->parsed()) {
            const auto m = builtin_fixture(fixture_name);
            write_instance_file(out_path, m);
            std::cout << "wrote " << m.name() << " to " << out_path << '\n';
            outcome.report["name"] = m.name();
            outcome.report["out"] = out_path;
        } else {
            const MdpModel m = load_model(input);
            if (!validate->parsed()) {
                const auto violations = validate_mdp(m);
                if (!violations.empty())
                    throw Error(ErrorCode::invalid_model, violations.front().path + ": " + violations.front().message);
            }
            if (validate->parsed()) outcome = cmd_validate(m);
            else if (eval->parsed()) outcome = cmd_eval(m, parse_policy_list(policy));
            else if (eval_mixed->parsed()) outcome = cmd_eval_mixed(m, parse_weights(weights));
            else if (solve->parsed()) outcome = cmd_solve(m, method, tol);
            else if (closure->parsed()) outcome = cmd_closure(m, policies, tol, seed);
            else if (chain->parsed()) outcome = cmd_chain(m, parse_policy(from), parse_policy(to), tol);
            else if (mix->parsed()) outcome = cmd_mix_check(m, samples, seed, tol);
            else if (sim->parsed()) outcome = cmd_simulate(m, schedule, steps, seed, snapshots);
            outcome.report["instance"] = m.name();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (!e.witness().empty()) std::cerr << "  witness policy " << to_string(PurePolicy(e.witness())) << '\n';
        outcome.code = input_error;
        outcome.report = Json::object();
        outcome.report["error"] = std::string(to_string(e.code()));
        outcome.report["message"] = e.detail();
        if (!e.witness().empty()) outcome.report["witness"] = e.witness();
    }
    try {
        write_report(report_path, command, outcome);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return input_error;
    }
    return outcome.code;
}
