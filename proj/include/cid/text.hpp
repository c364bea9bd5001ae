#pragma once
// Small string helpers shared across modules.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cid::text {

std::string_view trim(std::string_view s) noexcept;
bool is_blank(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);

/// Lowercased runs of ASCII alphanumerics; everything else separates tokens.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view s);

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s) noexcept;

std::string sha256_hex(std::string_view s);

bool starts_with_word_ci(std::string_view s, std::string_view word) noexcept;

/// One CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line);

/// Sorted keys, two-space indent, LF line ends, trailing newline. Invalid
/// UTF-8 is replaced rather than rejected.
std::string canonical_json(const nlohmann::json& j);

}  // namespace cid::text
