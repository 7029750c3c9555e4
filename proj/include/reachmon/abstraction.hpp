#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reachmon/boolexpr.hpp"
#include "reachmon/value.hpp"

namespace reachmon {

using StateId = std::uint64_t;

// Enumeration guard: bit states are materialized exhaustively, so the
// predicate alphabet is capped.
inline constexpr std::size_t kMaxPredicates = 24;

struct VarDecl {
  std::string name;
  Kind kind = Kind::Bool;
  std::optional<Value> default_value;
};

struct Predicate {
  std::string name;       // display name, unique within a spec
  std::string expr_text;  // as written
  BoolExprPtr expr;
};

struct Rule {
  std::string text;
  BoolExprPtr expr;
};

// A predicate bit vector, or a terminal tag. Ids are stable: a bit state's
// id is its little-endian encoding (sum of bits[i] * 2^i), terminal i has
// id 2^k + i.
class SymbolicState {
public:
  SymbolicState() = default;

  static SymbolicState from_bits(std::uint32_t bits, std::size_t k);
  static SymbolicState terminal(std::size_t tag_index, std::size_t k);

  bool is_terminal() const { return terminal_ >= 0; }
  std::size_t terminal_index() const { return static_cast<std::size_t>(terminal_); }
  std::size_t width() const { return k_; }
  bool bit(std::size_t i) const { return (bits_ >> i) & 1u; }
  std::uint32_t bits() const { return bits_; }
  StateId id() const;

  friend bool operator==(const SymbolicState& a, const SymbolicState& b) {
    return a.k_ == b.k_ && a.terminal_ == b.terminal_ &&
           (a.is_terminal() || a.bits_ == b.bits_);
  }
  friend bool operator!=(const SymbolicState& a, const SymbolicState& b) { return !(a == b); }
  friend bool operator<(const SymbolicState& a, const SymbolicState& b) { return a.id() < b.id(); }

private:
  std::uint32_t bits_ = 0;
  std::uint8_t k_ = 0;
  std::int32_t terminal_ = -1;
};

struct AbstractionSpec {
  std::vector<VarDecl> variables;
  std::vector<Predicate> predicates;
  std::vector<std::string> terminals;
  std::vector<Rule> state_rules;       // over predicate bits
  std::vector<Rule> transition_rules;  // over predicate bits, primed = successor

  std::size_t k() const { return predicates.size(); }
  const VarDecl* find_variable(const std::string& name) const;
};

// Canonical state ordering: valid bit states by ascending id, then terminals
// in declared order. The position in `states` is the row/column index used
// by every matrix and cache in the toolkit.
struct StateSpace {
  std::size_t k = 0;
  std::vector<std::string> predicate_names;
  std::vector<std::string> terminal_tags;
  std::vector<SymbolicState> states;
  std::unordered_map<StateId, std::size_t> index_by_id;

  std::size_t size() const { return states.size(); }
  const SymbolicState& at(std::size_t i) const { return states[i]; }
  std::optional<std::size_t> index_of_id(StateId id) const;
  std::optional<std::size_t> index_of(const SymbolicState& s) const { return index_of_id(s.id()); }
  std::string label(std::size_t i) const;  // decoded text for state at index i

  friend bool operator==(const StateSpace& a, const StateSpace& b);
};

SymbolicState abstract(const ConcreteState& state, const AbstractionSpec& spec);
// Element-wise abstraction; `collapse` drops consecutive duplicates (by
// default self-loops are kept and counted).
std::vector<SymbolicState> abstract_trace(const std::vector<ConcreteState>& states,
                                          const AbstractionSpec& spec, bool collapse = false);
bool is_valid_state(const SymbolicState& s, const AbstractionSpec& spec);
bool is_valid_transition(const SymbolicState& from, const SymbolicState& to,
                         const AbstractionSpec& spec);
StateSpace enumerate_state_space(const AbstractionSpec& spec);
std::string decode(const SymbolicState& s, const AbstractionSpec& spec);

// Distinct atomic conditions of a boolean expression, in order of first
// occurrence, each wrapped as a predicate named by its own source text.
std::vector<Predicate> atoms_of_unsafe_condition(const std::string& condition);

// Resolves rule/labeling variable names against a predicate alphabet and
// terminal tags. A predicate is addressable by its literal name, by the
// desugared dotted form when the name parses as a single atom, and by the
// positional alias p<i>.
class BitNameTable {
public:
  BitNameTable(const std::vector<std::string>& predicate_names,
               const std::vector<std::string>& terminal_tags);

  std::optional<std::size_t> predicate_index(const std::string& name) const;
  std::optional<std::size_t> terminal_index(const std::string& name) const;

private:
  std::unordered_map<std::string, std::size_t> predicates_;
  std::unordered_map<std::string, std::size_t> terminals_;
};

// Env over one or two symbolic states (primed = `to`). Predicate bits read
// false on terminal states; terminal tags are only visible when
// `terminal_tags_visible` is set (labeling context).
class SymbolicEnv : public Env {
public:
  SymbolicEnv(const BitNameTable& table, const SymbolicState* from, const SymbolicState* to,
              bool terminal_tags_visible)
      : table_(table), from_(from), to_(to), tags_visible_(terminal_tags_visible) {}

  std::optional<Value> lookup(const std::string& name, bool primed) const override;

private:
  const BitNameTable& table_;
  const SymbolicState* from_;
  const SymbolicState* to_;
  bool tags_visible_;
};

AbstractionSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const AbstractionSpec& spec);
AbstractionSpec load_spec(const std::string& path);
void save_spec(const AbstractionSpec& spec, const std::string& path);

// FNV-1a over the canonical JSON serialization, 16 hex digits.
std::string spec_hash(const AbstractionSpec& spec);
std::uint64_t fnv1a(const std::string& data);

}  // namespace reachmon
