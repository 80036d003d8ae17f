// Load an instance, find its optimal policies and check that mixing them keeps the optimal gain.

#include "unichain/unichain.hpp"

#include <iostream>

int main(int argc, char** argv) {
    using namespace unichain;
    const MdpModel model = argc > 1 ? read_instance_file(argv[1]) : random_unichain_instance(4, 2, 0.05, {0.0, 1.0}, 7);

    const OptimalSet optimal = brute_force_optimal_set(model);
    std::cout << "gain " << format_double(optimal.gain) << " reached by " << optimal.policies.size() << " policies\n";
    for (const auto& p : optimal.policies) std::cout << "  " << to_string(p) << '\n';

    const auto closure = verify_combination_closure(model, optimal);
    const auto mixtures = verify_mixture_optimality(model, optimal, 200, 1);
    std::cout << "combinations: max deviation " << format_double(closure.max_deviation) << '\n';
    std::cout << "mixtures:     max deviation " << format_double(mixtures.max_deviation) << '\n';
    return closure.pass && mixtures.pass ? 0 : 1;
}
