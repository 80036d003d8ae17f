#pragma once

#include "unichain/errors.hpp"
#include "unichain/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace unichain {

/**
 * Two states, two actions, both actions move deterministically to the other
 * state. Action 0 pays 0, action 1 pays 1 everywhere. All policies share one
 * chain, so (1,1) is the unique optimum while (0,1) and (1,0) earn 1/2 each.
 */
inline MdpModel equal_transitions_fixture() {
    const std::vector<std::vector<double>> swap{{0.0, 1.0}, {1.0, 0.0}};
    return MdpModel({swap, swap}, {{0.0, 0.0}, {1.0, 1.0}}, std::nullopt, "example-4-1");
}

/**
 * Two states, two actions: action 0 stays put and pays 1, action 1 jumps
 * uniformly and pays 0. Policies (0,0), (0,1), (1,0) earn 1; their
 * combination (1,1) earns 0. (0,0) has two closed classes, so the model is
 * not unichain.
 */
inline MdpModel multichain_fixture() {
    return MdpModel({{{1.0, 0.0}, {0.0, 1.0}}, {{0.5, 0.5}, {0.5, 0.5}}}, {{1.0, 1.0}, {0.0, 0.0}}, std::nullopt,
                    "example-4-2");
}

inline const std::vector<std::string_view>& fixture_names() {
    static const std::vector<std::string_view> names{"example-4-1", "example-4-2"};
    return names;
}

inline MdpModel builtin_fixture(std::string_view name) {
    if (name == "example-4-1" || name == "equal-transitions") return equal_transitions_fixture();
    if (name == "example-4-2" || name == "multichain") return multichain_fixture();
    throw Error(ErrorCode::unknown_fixture, "no built-in fixture named '" + std::string(name) + "'");
}

} // namespace unichain
