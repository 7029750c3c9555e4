#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reachmon/value.hpp"

namespace reachmon {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

struct BoolExpr;
using BoolExprPtr = std::shared_ptr<const BoolExpr>;

// One side of a comparison: either a variable reference (dotted name after
// function-sugar expansion) or a literal constant.
struct Operand {
  bool is_var = false;
  std::string var;
  bool primed = false;
  Value lit = false;
};

// Immutable expression tree. The grammar has boolean connectives, bare or
// function-style boolean atoms, and comparisons of a variable against a
// constant; there is no arithmetic.
struct BoolExpr {
  enum class Node { True, False, Var, Cmp, Not, And, Or };
  Node node = Node::True;

  // Var
  std::string var;
  bool primed = false;

  // Cmp
  CmpOp op = CmpOp::Eq;
  Operand lhs, rhs;

  // Not (a), And/Or (a, b)
  BoolExprPtr a, b;

  // For Var/Cmp nodes: the atom as written, whitespace removed. Used as the
  // display name of extracted predicates and for deduplication.
  std::string source;
};

// Variable binding used during evaluation. Names arrive already desugared
// (f(x,y) -> f.x.y). Returning nullopt makes evaluation raise
// unknown_variable.
class Env {
public:
  virtual ~Env() = default;
  virtual std::optional<Value> lookup(const std::string& name, bool primed) const = 0;
};

struct ExprParseOptions {
  // Primed variables (successor-state references) are only meaningful in
  // transition rules.
  bool allow_primed = false;
};

BoolExprPtr parse_bool_expr(const std::string& text, const ExprParseOptions& opts = {});
bool eval_bool_expr(const BoolExpr& e, const Env& env);
std::string print_bool_expr(const BoolExpr& e);

// Distinct atoms (Var and Cmp nodes) in order of first occurrence,
// deduplicated by their whitespace-stripped source text.
std::vector<BoolExprPtr> atoms_of(const BoolExprPtr& e);

// All variable references in the expression (name, primed) without
// deduplication of primed/unprimed pairs.
struct VarRef {
  std::string name;
  bool primed = false;
};
std::vector<VarRef> variables_of(const BoolExpr& e);

}  // namespace reachmon
