#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace unichain {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) return "nan";
    return std::string(buffer, end);
}

} // namespace unichain
