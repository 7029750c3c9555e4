#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "reachmon/errors.hpp"

namespace reachmon {

enum class Kind { Bool, Int, Real, Str };

// Scalar observation value. Int and Real are distinct kinds; comparisons
// promote to double only when the two sides differ.
using Value = std::variant<bool, std::int64_t, double, std::string>;

Kind kind_of(const Value& v);
std::string kind_name(Kind k);
std::optional<Kind> kind_from_name(const std::string& name);

// Canonical text form. Reals use the shortest representation that parses
// back to the same double.
std::string format_double(double d);
std::string to_display(const Value& v);

bool values_equal(const Value& a, const Value& b);
// -1 / 0 / +1; only defined for numeric kinds, throws type_mismatch otherwise.
int compare_numeric(const Value& a, const Value& b);

// A snapshot of an agent's observable variables, keyed by dotted name.
struct ConcreteState {
  std::map<std::string, Value> variables;

  const Value* find(const std::string& name) const {
    auto it = variables.find(name);
    return it == variables.end() ? nullptr : &it->second;
  }

  friend bool operator==(const ConcreteState& a, const ConcreteState& b) = default;
};

}  // namespace reachmon
