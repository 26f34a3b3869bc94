#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace lethe {

using Json = nlohmann::json;

// Canonical JSON: keys sorted by code point, no insignificant whitespace,
// UTF-8 strings, integers in shortest decimal form. Floating-point values are
// rejected with NonCanonicalizable; carry reals as decimal strings instead.
std::string canonical_encode(const Json& doc);

// Same layout rules as canonical_encode but floating-point numbers are
// permitted and written in shortest round-trip form. Used for documents that
// are never hashed (model snapshots, API bodies with raw vectors).
std::string compact_encode(const Json& doc);

// Shortest decimal string that parses back to exactly `value`.
std::string decimal_string(double value);

// Accepts a JSON number or a decimal string; throws MalformedRequest otherwise.
double parse_decimal(const Json& value, std::string_view field);

// UTC "YYYY-MM-DDTHH:MM:SSZ".
std::string iso8601_utc(std::int64_t epoch_seconds);

}  // namespace lethe
