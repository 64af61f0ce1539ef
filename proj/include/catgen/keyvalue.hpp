#pragma once

// Flat `key=value` text files: one pair per line, '#' starts a comment
// line, surrounding whitespace is trimmed. Keys are written sorted.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace catgen {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);
void write_key_values(const KeyValues& kv, const std::filesystem::path& path);

const std::string& require_key(const KeyValues& kv, const std::string& key);

// Strict numeric parsers; the whole string must parse. `what` names the
// field in the error message.
std::size_t parse_size(std::string_view text, std::string_view what);
std::uint64_t parse_u64(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);
std::vector<double> parse_double_list(std::string_view text, std::string_view what);

/// Shortest round-trippable decimal form.
std::string format_double(double v);

}  // namespace catgen
