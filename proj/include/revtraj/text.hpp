#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace revtraj::text {

std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
// Splits on '\n'; a trailing newline does not produce an empty last line.
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower(std::string_view s);
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);
// Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view s) noexcept;

}  // namespace revtraj::text
