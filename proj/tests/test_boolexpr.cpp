#include <doctest.h>

#include <functional>
#include <map>

#include "reachmon/boolexpr.hpp"
#include "reachmon/errors.hpp"

using namespace reachmon;

namespace {

class MapEnv : public Env {
 public:
  MapEnv(std::map<std::string, Value> plain, std::map<std::string, Value> primed = {})
      : plain_(std::move(plain)), primed_(std::move(primed)) {}

  std::optional<Value> lookup(const std::string& name, bool primed) const override {
    const auto& m = primed ? primed_ : plain_;
    auto it = m.find(name);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, Value> plain_;
  std::map<std::string, Value> primed_;
};

bool eval(const std::string& text, const MapEnv& env, ExprParseOptions opts = {}) {
  return eval_bool_expr(*parse_bool_expr(text, opts), env);
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("literals and bare boolean variables") {
  MapEnv env({{"flag", true}, {"off", false}});
  CHECK(eval("true", env));
  CHECK_FALSE(eval("false", env));
  CHECK(eval("flag", env));
  CHECK_FALSE(eval("off", env));
  CHECK(eval("not off", env));
  CHECK(eval("!off", env));
  CHECK(eval("¬ off", env));  // ¬
}

TEST_CASE("connective precedence and associativity") {
  MapEnv env({{"a", true}, {"b", false}, {"c", true}});
  // not binds tighter than and, which binds tighter than or
  CHECK(eval("!b & a", env));
  CHECK(eval("b | a & c", env));
  CHECK_FALSE(eval("(b | a) & b", env));
  CHECK(eval("a and not b or b and b", env));
  CHECK(eval("a ∧ c", env));        // ∧
  CHECK(eval("b ∨ c", env));        // ∨
  CHECK(eval("a && !b || b", env));
}

TEST_CASE("comparisons across kinds") {
  MapEnv env({{"speed", 0.3}, {"count", std::int64_t{7}}, {"name", std::string("fork")}});
  CHECK(eval("speed < 0.5", env));
  CHECK(eval("speed <= 0.3", env));
  CHECK_FALSE(eval("speed > 0.3", env));
  CHECK(eval("count == 7", env));
  CHECK(eval("count >= 7", env));
  CHECK(eval("count != 8", env));
  CHECK(eval("count < 7.5", env));  // int against real literal
  CHECK(eval("name == 'fork'", env));
  CHECK(eval("name != \"spoon\"", env));
  CHECK(eval("-1 < count", env));  // literal on the left
  CHECK(eval("7 == count", env));
}

TEST_CASE("function-style sugar desugars to dotted names") {
  MapEnv env({{"is_inside.fork.microwave", true}, {"is_toggled.microwave", false}});
  CHECK(eval("is_inside(fork, microwave)", env));
  CHECK_FALSE(eval("is_toggled(microwave)", env));
  CHECK(eval("is_inside(fork, microwave) & !is_toggled(microwave)", env));
  CHECK(eval("is_inside.fork.microwave", env));  // dotted form directly

  BoolExprPtr e = parse_bool_expr("is_inside(fork, microwave)");
  REQUIRE(e->node == BoolExpr::Node::Var);
  CHECK(e->var == "is_inside.fork.microwave");
}

TEST_CASE("primed variables gate on the parse option") {
  MapEnv env({{"x", false}}, {{"x", true}});
  ExprParseOptions primed;
  primed.allow_primed = true;
  CHECK(eval("x'", env, primed));
  CHECK_FALSE(eval("x", env, primed));
  CHECK(eval("!x & x'", env, primed));
  CHECK(code_of([] { parse_bool_expr("x'"); }) == "syntax_error");
}

TEST_CASE("prime is distinguished from string quotes") {
  MapEnv env({{"x", true}, {"s", std::string("it's")}}, {{"x", true}});
  ExprParseOptions primed;
  primed.allow_primed = true;
  CHECK(eval("s == \"it's\"", env, primed));
  CHECK(eval("x' & s == \"it's\"", env, primed));
}

TEST_CASE("evaluation errors carry stable codes") {
  MapEnv env({{"n", std::int64_t{1}}, {"s", std::string("x")}, {"b", true}});
  CHECK(code_of([&] { eval("missing", env); }) == "unknown_variable");
  CHECK(code_of([&] { eval("n", env); }) == "type_mismatch");        // non-bool atom
  CHECK(code_of([&] { eval("s < 3", env); }) == "type_mismatch");    // string vs int ordering
  CHECK(code_of([&] { eval("b == 'x'", env); }) == "type_mismatch"); // bool vs string equality
  CHECK(eval("n == 1.0", env));  // numeric cross-kind equality is fine
}

TEST_CASE("syntax errors report a byte offset") {
  auto msg_of = [](const std::string& text) {
    try {
      parse_bool_expr(text);
    } catch (const Error& e) {
      CHECK(e.code() == "syntax_error");
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg_of("a &").find("at byte") != std::string::npos);
  CHECK(msg_of("(a").find("at byte") != std::string::npos);
  CHECK(msg_of("a @ b").find("at byte") != std::string::npos);
  CHECK(msg_of("< 3").find("at byte") != std::string::npos);
  CHECK(msg_of("3").find("at byte") != std::string::npos);  // literal is not a formula
  CHECK(msg_of("").find("at byte") != std::string::npos);
}

TEST_CASE("printing round-trips through the parser") {
  MapEnv env({{"a", true}, {"b", false}, {"speed", 2.5}, {"mode", std::string("on")}},
             {{"a", false}, {"b", false}, {"speed", 2.5}, {"mode", std::string("on")}});
  ExprParseOptions primed;
  primed.allow_primed = true;
  for (const char* text : {
           "a & !b | b",
           "!(a | b)",
           "speed >= 2.5 & mode == 'on'",
           "a & b & a",
           "!(a & b) | speed < 99",
           "!a'",
           "a & (b | a') & speed != 3",
       }) {
    BoolExprPtr e = parse_bool_expr(text, primed);
    std::string printed = print_bool_expr(*e);
    BoolExprPtr again = parse_bool_expr(printed, primed);
    CHECK_MESSAGE(print_bool_expr(*again) == printed, "unstable print for ", text);
    CHECK_MESSAGE(eval_bool_expr(*e, env) == eval_bool_expr(*again, env),
                  "printed form evaluates differently for ", text);
  }
}

TEST_CASE("atoms are deduplicated by source text in first-seen order") {
  BoolExprPtr e = parse_bool_expr("(a<1 ∧ b==2) ∨ a<1");
  auto atoms = atoms_of(e);
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[0]->source == "a<1");
  CHECK(atoms[1]->source == "b==2");

  auto one = atoms_of(parse_bool_expr("flag"));
  REQUIRE(one.size() == 1);
  CHECK(one[0]->source == "flag");

  // whitespace does not defeat deduplication
  auto spaced = atoms_of(parse_bool_expr("a < 1 | a<1"));
  CHECK(spaced.size() == 1);
}

TEST_CASE("variables_of lists every reference including primed") {
  ExprParseOptions primed;
  primed.allow_primed = true;
  auto vars = variables_of(*parse_bool_expr("a & a' & b == 1", primed));
  REQUIRE(vars.size() == 3);
  CHECK(vars[0].name == "a");
  CHECK_FALSE(vars[0].primed);
  CHECK(vars[1].name == "a");
  CHECK(vars[1].primed);
  CHECK(vars[2].name == "b");
}

TEST_CASE("numbers parse as int64 or double by shape") {
  MapEnv env({{"i", std::int64_t{3}}, {"r", 3.0}});
  CHECK(eval("i == 3", env));
  CHECK(eval("r == 3.0", env));
  CHECK(eval("r == 3", env));     // numeric equality across kinds
  CHECK(eval("i <= 3.5", env));
  CHECK(eval("r > -1.5", env));
}
