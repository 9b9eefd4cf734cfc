#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tor {

/// ASCII lowercase copy.
std::string to_lower(const std::string& s);

/// Strip leading and trailing ASCII whitespace.
std::string trim(const std::string& s);

/// Collapse runs of whitespace (including newlines) to single spaces and trim.
std::string collapse_whitespace(const std::string& s);

/// Lowercase alphanumeric tokens; every non-alphanumeric byte is a separator.
std::vector<std::string> tokenize(const std::string& text);

/// Prefix of `text` covering at most `max_tokens` tokens (cut at a token end).
std::string truncate_tokens(const std::string& text, int max_tokens);

/// Split on a single character, keeping empty fields.
std::vector<std::string> split(const std::string& s, char sep);

/// Join with a separator.
std::string join(const std::vector<std::string>& parts, const std::string& sep);

/// True if `s` starts with `prefix`.
bool starts_with(const std::string& s, const std::string& prefix);

/// FNV-1a 64-bit hash, returned as a 16-digit lowercase hex string.
std::string fnv1a_hex(const std::string& data);

/// FNV-1a 64-bit hash as an integer.
std::uint64_t fnv1a(const std::string& data);

/// Glob match supporting '*' wildcards only.
bool glob_match(const std::string& pattern, const std::string& text);

}  // namespace tor
