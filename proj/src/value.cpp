#include "reachmon/value.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace reachmon {

Kind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return Kind::Bool;
    case 1: return Kind::Int;
    case 2: return Kind::Real;
    default: return Kind::Str;
  }
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Bool: return "bool";
    case Kind::Int: return "int";
    case Kind::Real: return "real";
    case Kind::Str: return "string";
  }
  return "?";
}

std::optional<Kind> kind_from_name(const std::string& name) {
  if (name == "bool") return Kind::Bool;
  if (name == "int") return Kind::Int;
  if (name == "real" || name == "double" || name == "float") return Kind::Real;
  if (name == "string" || name == "str") return Kind::Str;
  return std::nullopt;
}

std::string format_double(double d) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), d);
  return std::string(buf.data(), res.ptr);
}

std::string to_display(const Value& v) {
  switch (kind_of(v)) {
    case Kind::Bool: return std::get<bool>(v) ? "true" : "false";
    case Kind::Int: return std::to_string(std::get<std::int64_t>(v));
    case Kind::Real: return format_double(std::get<double>(v));
    case Kind::Str: return std::get<std::string>(v);
  }
  return "?";
}

static bool is_numeric(Kind k) { return k == Kind::Int || k == Kind::Real; }

bool values_equal(const Value& a, const Value& b) {
  Kind ka = kind_of(a), kb = kind_of(b);
  if (is_numeric(ka) && is_numeric(kb)) return compare_numeric(a, b) == 0;
  if (ka != kb) {
    fail("type_mismatch", "cannot compare " + kind_name(ka) + " with " + kind_name(kb));
  }
  return a == b;
}

int compare_numeric(const Value& a, const Value& b) {
  Kind ka = kind_of(a), kb = kind_of(b);
  if (!is_numeric(ka) || !is_numeric(kb)) {
    fail("type_mismatch",
         "ordering requires numeric operands, got " + kind_name(ka) + " and " + kind_name(kb));
  }
  if (ka == Kind::Int && kb == Kind::Int) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  double x = ka == Kind::Int ? static_cast<double>(std::get<std::int64_t>(a)) : std::get<double>(a);
  double y = kb == Kind::Int ? static_cast<double>(std::get<std::int64_t>(b)) : std::get<double>(b);
  return x < y ? -1 : (x > y ? 1 : 0);
}

}  // namespace reachmon
