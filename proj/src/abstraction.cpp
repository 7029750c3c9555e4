#include "reachmon/abstraction.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "reachmon/json_util.hpp"

namespace reachmon {

SymbolicState SymbolicState::from_bits(std::uint32_t bits, std::size_t k) {
  SymbolicState s;
  s.bits_ = bits & ((k == 32 ? 0u : (1u << k)) - 1u);
  if (k == 0) s.bits_ = 0;
  s.k_ = static_cast<std::uint8_t>(k);
  return s;
}

SymbolicState SymbolicState::terminal(std::size_t tag_index, std::size_t k) {
  SymbolicState s;
  s.k_ = static_cast<std::uint8_t>(k);
  s.terminal_ = static_cast<std::int32_t>(tag_index);
  return s;
}

StateId SymbolicState::id() const {
  if (is_terminal()) return (StateId{1} << k_) + static_cast<StateId>(terminal_);
  return bits_;
}

const VarDecl* AbstractionSpec::find_variable(const std::string& name) const {
  for (const auto& v : variables) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

namespace {

// Binds predicate expressions to an observation, falling back to declared
// defaults for absent variables.
class ConcreteEnv : public Env {
public:
  ConcreteEnv(const ConcreteState& state, const AbstractionSpec& spec)
      : state_(state), spec_(spec) {}

  std::optional<Value> lookup(const std::string& name, bool primed) const override {
    if (primed) return std::nullopt;
    if (const Value* v = state_.find(name)) return *v;
    if (const VarDecl* d = spec_.find_variable(name)) {
      if (d->default_value) return *d->default_value;
    }
    return std::nullopt;
  }

private:
  const ConcreteState& state_;
  const AbstractionSpec& spec_;
};

bool kind_accepts(Kind declared, Kind observed) {
  if (declared == observed) return true;
  // Integers embed exactly into reals.
  return declared == Kind::Real && observed == Kind::Int;
}

void check_schema(const ConcreteState& state, const AbstractionSpec& spec) {
  for (const auto& [name, value] : state.variables) {
    const VarDecl* d = spec.find_variable(name);
    if (!d) fail("schema_violation", "variable '" + name + "' is not declared in the spec");
    if (!kind_accepts(d->kind, kind_of(value))) {
      fail("schema_violation", "variable '" + name + "' has kind " + kind_name(kind_of(value)) +
                                   ", declared " + kind_name(d->kind));
    }
  }
}

}  // namespace

SymbolicState abstract(const ConcreteState& state, const AbstractionSpec& spec) {
  check_schema(state, spec);
  for (std::size_t t = 0; t < spec.terminals.size(); ++t) {
    const Value* v = state.find(spec.terminals[t]);
    if (v && kind_of(*v) == Kind::Bool && std::get<bool>(*v)) {
      return SymbolicState::terminal(t, spec.k());
    }
  }
  ConcreteEnv env(state, spec);
  std::uint32_t bits = 0;
  for (std::size_t i = 0; i < spec.predicates.size(); ++i) {
    if (eval_bool_expr(*spec.predicates[i].expr, env)) bits |= (1u << i);
  }
  return SymbolicState::from_bits(bits, spec.k());
}

std::vector<SymbolicState> abstract_trace(const std::vector<ConcreteState>& states,
                                          const AbstractionSpec& spec, bool collapse) {
  std::vector<SymbolicState> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    SymbolicState s;
    try {
      s = abstract(states[i], spec);
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(i) + ": " + e.what());
    }
    if (collapse && !out.empty() && out.back() == s) continue;
    out.push_back(s);
  }
  return out;
}

BitNameTable::BitNameTable(const std::vector<std::string>& predicate_names,
                           const std::vector<std::string>& terminal_tags) {
  for (std::size_t i = 0; i < predicate_names.size(); ++i) {
    predicates_[predicate_names[i]] = i;
    // Function-style names also resolve via their desugared dotted form.
    try {
      BoolExprPtr e = parse_bool_expr(predicate_names[i]);
      if (e->node == BoolExpr::Node::Var) predicates_.emplace(e->var, i);
    } catch (const Error&) {
      // Comparison-shaped or otherwise unparseable names only get the
      // literal and positional aliases.
    }
  }
  for (std::size_t i = 0; i < predicate_names.size(); ++i) {
    predicates_.emplace("p" + std::to_string(i), i);
  }
  for (std::size_t i = 0; i < terminal_tags.size(); ++i) {
    terminals_[terminal_tags[i]] = i;
  }
}

std::optional<std::size_t> BitNameTable::predicate_index(const std::string& name) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> BitNameTable::terminal_index(const std::string& name) const {
  auto it = terminals_.find(name);
  if (it == terminals_.end()) return std::nullopt;
  return it->second;
}

std::optional<Value> SymbolicEnv::lookup(const std::string& name, bool primed) const {
  const SymbolicState* s = primed ? to_ : from_;
  if (!s) return std::nullopt;
  if (auto p = table_.predicate_index(name)) {
    if (s->is_terminal()) return tags_visible_ ? std::optional<Value>(false) : std::nullopt;
    return Value(s->bit(*p));
  }
  if (tags_visible_) {
    if (auto t = table_.terminal_index(name)) {
      return Value(s->is_terminal() && s->terminal_index() == *t);
    }
  }
  return std::nullopt;
}

namespace {

BitNameTable rule_table(const AbstractionSpec& spec) {
  std::vector<std::string> names;
  names.reserve(spec.predicates.size());
  for (const auto& p : spec.predicates) names.push_back(p.name);
  return BitNameTable(names, {});
}

bool state_rules_hold(const SymbolicState& s, const AbstractionSpec& spec,
                      const BitNameTable& table) {
  SymbolicEnv env(table, &s, nullptr, false);
  for (const auto& r : spec.state_rules) {
    if (!eval_bool_expr(*r.expr, env)) return false;
  }
  return true;
}

}  // namespace

bool is_valid_state(const SymbolicState& s, const AbstractionSpec& spec) {
  if (s.is_terminal()) return true;
  return state_rules_hold(s, spec, rule_table(spec));
}

bool is_valid_transition(const SymbolicState& from, const SymbolicState& to,
                         const AbstractionSpec& spec) {
  BitNameTable table = rule_table(spec);
  if (!from.is_terminal() && !state_rules_hold(from, spec, table)) return false;
  if (!to.is_terminal() && !state_rules_hold(to, spec, table)) return false;
  // Terminals absorb: the only outgoing transition is the self-loop.
  if (from.is_terminal()) return from == to;
  // Entering a terminal is always allowed; transition rules constrain
  // bit-to-bit moves only.
  if (to.is_terminal()) return true;
  SymbolicEnv env(table, &from, &to, false);
  for (const auto& r : spec.transition_rules) {
    if (!eval_bool_expr(*r.expr, env)) return false;
  }
  return true;
}

StateSpace enumerate_state_space(const AbstractionSpec& spec) {
  if (spec.k() > kMaxPredicates) {
    fail("state_space_too_large", "spec has " + std::to_string(spec.k()) +
                                      " predicates, cap is " + std::to_string(kMaxPredicates));
  }
  StateSpace space;
  space.k = spec.k();
  for (const auto& p : spec.predicates) space.predicate_names.push_back(p.name);
  space.terminal_tags = spec.terminals;

  BitNameTable table = rule_table(spec);
  std::uint64_t total = std::uint64_t{1} << spec.k();
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    SymbolicState s = SymbolicState::from_bits(static_cast<std::uint32_t>(bits), spec.k());
    if (state_rules_hold(s, spec, table)) space.states.push_back(s);
  }
  for (std::size_t t = 0; t < spec.terminals.size(); ++t) {
    space.states.push_back(SymbolicState::terminal(t, spec.k()));
  }
  for (std::size_t i = 0; i < space.states.size(); ++i) {
    space.index_by_id[space.states[i].id()] = i;
  }
  return space;
}

std::optional<std::size_t> StateSpace::index_of_id(StateId id) const {
  auto it = index_by_id.find(id);
  if (it == index_by_id.end()) return std::nullopt;
  return it->second;
}

std::string StateSpace::label(std::size_t i) const {
  const SymbolicState& s = states.at(i);
  if (s.is_terminal()) return terminal_tags.at(s.terminal_index());
  std::string out;
  for (std::size_t b = 0; b < predicate_names.size(); ++b) {
    if (b) out += ", ";
    out += predicate_names[b] + "=" + (s.bit(b) ? "true" : "false");
  }
  return out;
}

bool operator==(const StateSpace& a, const StateSpace& b) {
  return a.k == b.k && a.predicate_names == b.predicate_names &&
         a.terminal_tags == b.terminal_tags && a.states == b.states;
}

std::string decode(const SymbolicState& s, const AbstractionSpec& spec) {
  if (s.is_terminal()) return spec.terminals.at(s.terminal_index());
  std::string out;
  for (std::size_t b = 0; b < spec.predicates.size(); ++b) {
    if (b) out += ", ";
    out += spec.predicates[b].name + "=" + (s.bit(b) ? "true" : "false");
  }
  return out;
}

std::vector<Predicate> atoms_of_unsafe_condition(const std::string& condition) {
  BoolExprPtr e = parse_bool_expr(condition);
  std::vector<Predicate> out;
  for (const auto& atom : atoms_of(e)) {
    out.push_back(Predicate{atom->source, atom->source, atom});
  }
  return out;
}

namespace {

void validate_predicate_expr(const Predicate& p, const AbstractionSpec& spec) {
  for (const auto& ref : variables_of(*p.expr)) {
    const VarDecl* d = spec.find_variable(ref.name);
    if (!d) {
      fail("unknown_variable",
           "predicate '" + p.name + "' references undeclared variable '" + ref.name + "'");
    }
  }
  // Static kind checks: bare atoms must be bool, ordering needs numerics.
  struct Walk {
    const AbstractionSpec& spec;
    const Predicate& p;
    void run(const BoolExpr& e) const {
      switch (e.node) {
        case BoolExpr::Node::Var: {
          const VarDecl* d = spec.find_variable(e.var);
          if (d && d->kind != Kind::Bool) {
            fail("type_mismatch", "predicate '" + p.name + "': variable '" + e.var +
                                      "' of kind " + kind_name(d->kind) + " used as atom");
          }
          return;
        }
        case BoolExpr::Node::Cmp: {
          bool ordering = e.op == CmpOp::Lt || e.op == CmpOp::Le || e.op == CmpOp::Gt ||
                          e.op == CmpOp::Ge;
          auto side_kind = [&](const Operand& o) -> std::optional<Kind> {
            if (o.is_var) {
              const VarDecl* d = spec.find_variable(o.var);
              return d ? std::optional<Kind>(d->kind) : std::nullopt;
            }
            return kind_of(o.lit);
          };
          auto check = [&](std::optional<Kind> k) {
            if (ordering && k && *k != Kind::Int && *k != Kind::Real) {
              fail("type_mismatch",
                   "predicate '" + p.name + "': ordering comparison on " + kind_name(*k));
            }
          };
          check(side_kind(e.lhs));
          check(side_kind(e.rhs));
          return;
        }
        case BoolExpr::Node::Not: run(*e.a); return;
        case BoolExpr::Node::And:
        case BoolExpr::Node::Or: run(*e.a); run(*e.b); return;
        default: return;
      }
    }
  };
  Walk{spec, p}.run(*p.expr);
}

void validate_spec(const AbstractionSpec& spec) {
  {
    std::unordered_set<std::string> seen;
    for (const auto& v : spec.variables) {
      if (!seen.insert(v.name).second) {
        fail("schema_violation", "duplicate variable '" + v.name + "'");
      }
      if (v.default_value && !kind_accepts(v.kind, kind_of(*v.default_value))) {
        fail("type_mismatch", "default for '" + v.name + "' has kind " +
                                  kind_name(kind_of(*v.default_value)) + ", declared " +
                                  kind_name(v.kind));
      }
    }
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& p : spec.predicates) {
      if (!seen.insert(p.name).second) {
        fail("duplicate_predicate", "duplicate predicate '" + p.name + "'");
      }
      validate_predicate_expr(p, spec);
    }
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& t : spec.terminals) {
      if (!seen.insert(t).second) fail("schema_violation", "duplicate terminal tag '" + t + "'");
      const VarDecl* d = spec.find_variable(t);
      if (!d) {
        fail("schema_violation",
             "terminal tag '" + t + "' must be declared as a bool variable");
      }
      if (d->kind != Kind::Bool) {
        fail("type_mismatch", "terminal tag variable '" + t + "' must be bool");
      }
    }
  }
  BitNameTable table = rule_table(spec);
  auto check_rule = [&](const Rule& r, bool transition) {
    for (const auto& ref : variables_of(*r.expr)) {
      if (!table.predicate_index(ref.name)) {
        fail("unknown_variable", std::string(transition ? "transition" : "state") + " rule '" +
                                     r.text + "' references unknown predicate '" + ref.name + "'");
      }
    }
  };
  for (const auto& r : spec.state_rules) check_rule(r, false);
  for (const auto& r : spec.transition_rules) check_rule(r, true);
}

Kind parse_kind(const Json& j, const std::string& where) {
  if (!j.is_string()) fail("schema_violation", where + ": kind must be a string");
  auto k = kind_from_name(j.get<std::string>());
  if (!k) fail("schema_violation", where + ": unknown kind '" + j.get<std::string>() + "'");
  return *k;
}

}  // namespace

AbstractionSpec spec_from_json_text(const std::string& text) {
  Json j = parse_json(text, "abstraction spec");
  if (!j.is_object()) fail("schema_violation", "abstraction spec: expected object");
  AbstractionSpec spec;

  const Json& vars = j.value("variables", Json::object());
  if (!vars.is_object()) fail("schema_violation", "abstraction spec: variables must be an object");
  for (auto it = vars.begin(); it != vars.end(); ++it) {
    VarDecl d;
    d.name = it.key();
    const Json& v = it.value();
    if (v.is_string()) {
      d.kind = parse_kind(v, "variable '" + d.name + "'");
    } else if (v.is_object()) {
      if (!v.contains("kind")) {
        fail("schema_violation", "variable '" + d.name + "': missing kind");
      }
      d.kind = parse_kind(v.at("kind"), "variable '" + d.name + "'");
      if (v.contains("default")) {
        d.default_value = value_from_json(v.at("default"), "default for '" + d.name + "'");
      }
    } else {
      fail("schema_violation", "variable '" + d.name + "': expected kind string or object");
    }
    spec.variables.push_back(std::move(d));
  }

  const Json& preds = j.value("predicates", Json::array());
  if (!preds.is_array()) fail("schema_violation", "abstraction spec: predicates must be an array");
  for (const auto& p : preds) {
    if (!p.is_object() || !p.contains("name") || !p.contains("expr")) {
      fail("schema_violation", "predicate entries need name and expr");
    }
    Predicate pred;
    pred.name = p.at("name").get<std::string>();
    pred.expr_text = p.at("expr").get<std::string>();
    pred.expr = parse_bool_expr(pred.expr_text);
    spec.predicates.push_back(std::move(pred));
  }

  for (const auto& t : j.value("terminals", Json::array())) {
    spec.terminals.push_back(t.get<std::string>());
  }
  for (const auto& r : j.value("state_rules", Json::array())) {
    std::string text_r = r.get<std::string>();
    spec.state_rules.push_back(Rule{text_r, parse_bool_expr(text_r)});
  }
  for (const auto& r : j.value("transition_rules", Json::array())) {
    std::string text_r = r.get<std::string>();
    ExprParseOptions opts;
    opts.allow_primed = true;
    spec.transition_rules.push_back(Rule{text_r, parse_bool_expr(text_r, opts)});
  }

  validate_spec(spec);
  return spec;
}

std::string spec_to_json_text(const AbstractionSpec& spec) {
  Json j = Json::object();
  Json vars = Json::object();
  for (const auto& v : spec.variables) {
    Json d = Json::object();
    d["kind"] = kind_name(v.kind);
    if (v.default_value) d["default"] = value_to_json(*v.default_value);
    vars[v.name] = d;
  }
  j["variables"] = vars;
  Json preds = Json::array();
  for (const auto& p : spec.predicates) {
    preds.push_back(Json{{"name", p.name}, {"expr", p.expr_text}});
  }
  j["predicates"] = preds;
  j["terminals"] = spec.terminals;
  Json srules = Json::array();
  for (const auto& r : spec.state_rules) srules.push_back(r.text);
  j["state_rules"] = srules;
  Json trules = Json::array();
  for (const auto& r : spec.transition_rules) trules.push_back(r.text);
  j["transition_rules"] = trules;
  return j.dump(2) + "\n";
}

AbstractionSpec load_spec(const std::string& path) {
  return spec_from_json_text(read_file(path));
}

void save_spec(const AbstractionSpec& spec, const std::string& path) {
  write_file(path, spec_to_json_text(spec));
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string spec_hash(const AbstractionSpec& spec) {
  std::uint64_t h = fnv1a(spec_to_json_text(spec));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace reachmon
