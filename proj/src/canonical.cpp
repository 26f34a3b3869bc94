#include "lethe/canonical.hpp"

#include <charconv>
#include <cmath>
#include <ctime>

#include "lethe/error.hpp"

namespace lethe {
namespace {

void reject_floats(const Json& doc) {
  switch (doc.type()) {
    case Json::value_t::number_float:
      fail(Errc::NonCanonicalizable,
           "floating-point value in hashed document; use a decimal string");
    case Json::value_t::object:
    case Json::value_t::array:
      for (const auto& child : doc) reject_floats(child);
      break;
    default:
      break;
  }
}

}  // namespace

std::string canonical_encode(const Json& doc) {
  reject_floats(doc);
  return compact_encode(doc);
}

std::string compact_encode(const Json& doc) {
  try {
    // Json is nlohmann::json, whose objects are std::map<std::string, ...>;
    // byte-wise key order on UTF-8 equals code-point order.
    return doc.dump(-1, ' ', false, Json::error_handler_t::strict);
  } catch (const Json::type_error& e) {
    fail(Errc::NonCanonicalizable, e.what());
  }
}

std::string decimal_string(double value) {
  if (!std::isfinite(value)) {
    fail(Errc::NonCanonicalizable, "non-finite value has no decimal form");
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) fail(Errc::NonCanonicalizable, "to_chars failed");
  return std::string(buf, end);
}

double parse_decimal(const Json& value, std::string_view field) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    double out = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && end == s.data() + s.size() && std::isfinite(out)) {
      return out;
    }
  }
  fail(Errc::MalformedRequest,
       "field '" + std::string(field) + "' must be a finite number");
}

std::string iso8601_utc(std::int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace lethe
