#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unichain {

/// Failure categories raised by the library. The CLI maps them to exit codes.
enum class ErrorCode {
    invalid_model,
    invalid_policy,
    singular_system,
    non_positive_entry,
    residual_too_large,
    policy_space_too_large,
    reducible_policy,
    degenerate_denominator,
    non_positive_result,
    selector_mismatch,
    too_many_combinations,
    empty_support,
    infeasible_parameter,
    unknown_fixture,
    parse_error,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_model: return "invalid-model";
    case ErrorCode::invalid_policy: return "invalid-policy";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::non_positive_entry: return "non-positive-entry";
    case ErrorCode::residual_too_large: return "residual-too-large";
    case ErrorCode::policy_space_too_large: return "policy-space-too-large";
    case ErrorCode::reducible_policy: return "reducible-policy-found";
    case ErrorCode::degenerate_denominator: return "degenerate-denominator";
    case ErrorCode::non_positive_result: return "non-positive-result";
    case ErrorCode::selector_mismatch: return "selector-length-mismatch";
    case ErrorCode::too_many_combinations: return "too-many-combinations";
    case ErrorCode::empty_support: return "empty-support";
    case ErrorCode::infeasible_parameter: return "infeasible-parameter";
    case ErrorCode::unknown_fixture: return "unknown-fixture";
    case ErrorCode::parse_error: return "parse-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, std::vector<std::size_t> witness = {})
        : std::runtime_error(std::string(to_string(code)) + ": " + what),
          code_(code),
          detail_(what),
          witness_(std::move(witness)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Offending policy, when the failure is attributable to one.
    const std::vector<std::size_t>& witness() const noexcept { return witness_; }

    /// True for the failures that indicate the chain was not irreducible.
    bool signals_reducibility() const noexcept {
        return code_ == ErrorCode::singular_system || code_ == ErrorCode::non_positive_entry;
    }

private:
    ErrorCode code_;
    std::string detail_;
    std::vector<std::size_t> witness_;
};

} // namespace unichain
