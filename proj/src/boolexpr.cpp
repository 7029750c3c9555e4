#include "reachmon/boolexpr.hpp"

#include <cctype>
#include <charconv>
#include <unordered_set>

namespace reachmon {

namespace {

enum class Tok {
  End, LParen, RParen, Not, And, Or, True, False,
  Ident, Number, String, Cmp, Comma, Prime
};

struct Token {
  Tok type = Tok::End;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;       // Ident payload / String payload
  Value number = false;   // Number payload
  CmpOp op = CmpOp::Eq;
};

[[noreturn]] void syntax_error(const std::string& what, std::size_t at) {
  fail("syntax_error", what + " at byte " + std::to_string(at));
}

class Lexer {
public:
  explicit Lexer(const std::string& text) : s_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.begin = pos_;
    if (pos_ >= s_.size()) {
      t.type = Tok::End;
      t.end = pos_;
      return finish(t);
    }
    char c = s_[pos_];

    // Unicode connectives: ∧ (E2 88 A7), ∨ (E2 88 A8), ¬ (C2 AC).
    if (match3("\xE2\x88\xA7")) return finish(simple(Tok::And, 3));
    if (match3("\xE2\x88\xA8")) return finish(simple(Tok::Or, 3));
    if (match2("\xC2\xAC")) return finish(simple(Tok::Not, 2));

    switch (c) {
      case '(': return finish(simple(Tok::LParen, 1));
      case ')': return finish(simple(Tok::RParen, 1));
      case ',': return finish(simple(Tok::Comma, 1));
      case '&': return finish(simple(Tok::And, s_.compare(pos_, 2, "&&") == 0 ? 2 : 1));
      case '|': return finish(simple(Tok::Or, s_.compare(pos_, 2, "||") == 0 ? 2 : 1));
      default: break;
    }

    if (c == '!') {
      if (s_.compare(pos_, 2, "!=") == 0) return finish(cmp(CmpOp::Ne, 2));
      return finish(simple(Tok::Not, 1));
    }
    if (c == '=') {
      if (s_.compare(pos_, 2, "==") == 0) return finish(cmp(CmpOp::Eq, 2));
      syntax_error("unexpected '='", pos_);
    }
    if (c == '<') return finish(cmp(s_.compare(pos_, 2, "<=") == 0 ? CmpOp::Le : CmpOp::Lt,
                                    s_.compare(pos_, 2, "<=") == 0 ? 2 : 1));
    if (c == '>') return finish(cmp(s_.compare(pos_, 2, ">=") == 0 ? CmpOp::Ge : CmpOp::Gt,
                                    s_.compare(pos_, 2, ">=") == 0 ? 2 : 1));

    if (c == '\'') {
      // A quote glued to an identifier or ')' is the primed-state marker;
      // anywhere else it opens a string literal.
      if (glued_prime_) return finish(simple(Tok::Prime, 1));
      return finish(string_lit('\''));
    }
    if (c == '"') return finish(string_lit('"'));

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      return finish(number_lit());
    }

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      Token t2;
      t2.begin = pos_;
      std::size_t start = pos_;
      // Identifiers may be dotted paths: is_toggled.microwave
      while (pos_ < s_.size()) {
        char k = s_[pos_];
        if (std::isalnum(static_cast<unsigned char>(k)) || k == '_') {
          ++pos_;
          continue;
        }
        if (k == '.' && pos_ + 1 < s_.size() &&
            (std::isalpha(static_cast<unsigned char>(s_[pos_ + 1])) || s_[pos_ + 1] == '_')) {
          pos_ += 2;
          continue;
        }
        break;
      }
      t2.text = s_.substr(start, pos_ - start);
      t2.end = pos_;
      if (t2.text == "true") t2.type = Tok::True;
      else if (t2.text == "false") t2.type = Tok::False;
      else if (t2.text == "and") t2.type = Tok::And;
      else if (t2.text == "or") t2.type = Tok::Or;
      else if (t2.text == "not") t2.type = Tok::Not;
      else t2.type = Tok::Ident;
      return finish(t2);
    }

    syntax_error(std::string("unexpected character '") + c + "'", pos_);
  }

private:
  bool match2(const char* s) const { return s_.compare(pos_, 2, s) == 0; }
  bool match3(const char* s) const { return s_.compare(pos_, 3, s) == 0; }

  Token simple(Tok type, std::size_t len) {
    Token t;
    t.type = type;
    t.begin = pos_;
    pos_ += len;
    t.end = pos_;
    return t;
  }

  Token cmp(CmpOp op, std::size_t len) {
    Token t = simple(Tok::Cmp, len);
    t.op = op;
    return t;
  }

  Token string_lit(char quote) {
    Token t;
    t.type = Tok::String;
    t.begin = pos_;
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        ++pos_;
      }
      out.push_back(s_[pos_++]);
    }
    if (pos_ >= s_.size()) syntax_error("unterminated string literal", t.begin);
    ++pos_;
    t.text = std::move(out);
    t.end = pos_;
    return t;
  }

  Token number_lit() {
    Token t;
    t.type = Tok::Number;
    t.begin = pos_;
    std::size_t start = pos_;
    if (s_[pos_] == '-') ++pos_;
    bool real = false;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) { ++pos_; continue; }
      if (c == '.' && !real) { real = true; ++pos_; continue; }
      if ((c == 'e' || c == 'E') && pos_ + 1 < s_.size()) {
        char n = s_[pos_ + 1];
        if (std::isdigit(static_cast<unsigned char>(n)) || n == '+' || n == '-') {
          real = true;
          pos_ += 2;
          continue;
        }
      }
      break;
    }
    const char* b = s_.data() + start;
    const char* e = s_.data() + pos_;
    if (real) {
      double d = 0;
      auto r = std::from_chars(b, e, d);
      if (r.ec != std::errc() || r.ptr != e) syntax_error("bad number literal", start);
      t.number = d;
    } else {
      std::int64_t i = 0;
      auto r = std::from_chars(b, e, i);
      if (r.ec != std::errc() || r.ptr != e) syntax_error("bad number literal", start);
      t.number = i;
    }
    t.end = pos_;
    return t;
  }

  void skip_ws() {
    glued_prime_ = glued_after_;
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
      glued_prime_ = false;
    }
  }

  Token finish(Token t) {
    glued_after_ = (t.type == Tok::Ident || t.type == Tok::RParen);
    return t;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  bool glued_after_ = false;  // last token can take a prime suffix
  bool glued_prime_ = false;
};

std::string strip_ws(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

class Parser {
public:
  Parser(const std::string& text, const ExprParseOptions& opts)
      : text_(text), lex_(text), opts_(opts) {
    advance();
  }

  BoolExprPtr parse() {
    BoolExprPtr e = expr();
    if (cur_.type != Tok::End) syntax_error("trailing input", cur_.begin);
    return e;
  }

private:
  void advance() { cur_ = lex_.next(); }

  bool accept(Tok t) {
    if (cur_.type != t) return false;
    advance();
    return true;
  }

  void expect(Tok t, const char* what) {
    if (cur_.type != t) syntax_error(std::string("expected ") + what, cur_.begin);
    advance();
  }

  BoolExprPtr expr() { return or_expr(); }

  BoolExprPtr or_expr() {
    BoolExprPtr left = and_expr();
    while (cur_.type == Tok::Or) {
      advance();
      BoolExprPtr right = and_expr();
      auto n = std::make_shared<BoolExpr>();
      n->node = BoolExpr::Node::Or;
      n->a = left;
      n->b = right;
      left = n;
    }
    return left;
  }

  BoolExprPtr and_expr() {
    BoolExprPtr left = unary();
    while (cur_.type == Tok::And) {
      advance();
      BoolExprPtr right = unary();
      auto n = std::make_shared<BoolExpr>();
      n->node = BoolExpr::Node::And;
      n->a = left;
      n->b = right;
      left = n;
    }
    return left;
  }

  BoolExprPtr unary() {
    if (cur_.type == Tok::Not) {
      advance();
      auto n = std::make_shared<BoolExpr>();
      n->node = BoolExpr::Node::Not;
      n->a = unary();
      return n;
    }
    return primary();
  }

  BoolExprPtr primary() {
    if (accept(Tok::LParen)) {
      BoolExprPtr e = expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (cur_.type == Tok::True || cur_.type == Tok::False) {
      bool v = cur_.type == Tok::True;
      std::size_t begin = cur_.begin;
      advance();
      if (cur_.type == Tok::Cmp) return comparison_with_lhs(make_lit(v), begin);
      auto n = std::make_shared<BoolExpr>();
      n->node = v ? BoolExpr::Node::True : BoolExpr::Node::False;
      return n;
    }
    if (cur_.type == Tok::Ident) {
      std::size_t begin = cur_.begin;
      Operand v = var_ref();
      if (cur_.type == Tok::Cmp) return comparison_with_lhs(v, begin);
      auto n = std::make_shared<BoolExpr>();
      n->node = BoolExpr::Node::Var;
      n->var = v.var;
      n->primed = v.primed;
      n->source = strip_ws(text_.substr(begin, last_end_ - begin));
      return n;
    }
    if (cur_.type == Tok::Number || cur_.type == Tok::String) {
      std::size_t begin = cur_.begin;
      Operand lit = literal();
      if (cur_.type != Tok::Cmp) {
        syntax_error("literal must be part of a comparison", begin);
      }
      return comparison_with_lhs(lit, begin);
    }
    syntax_error("expected expression", cur_.begin);
  }

  Operand make_lit(Value v) {
    Operand o;
    o.is_var = false;
    o.lit = std::move(v);
    return o;
  }

  Operand literal() {
    Operand o;
    if (cur_.type == Tok::Number) {
      o = make_lit(cur_.number);
    } else if (cur_.type == Tok::String) {
      o = make_lit(cur_.text);
    } else if (cur_.type == Tok::True) {
      o = make_lit(true);
    } else if (cur_.type == Tok::False) {
      o = make_lit(false);
    } else {
      syntax_error("expected literal", cur_.begin);
    }
    last_end_ = cur_.end;
    advance();
    return o;
  }

  // Dotted IDENT ['(' args ')'] ['] with function sugar f(x,y) = f.x.y
  Operand var_ref() {
    Operand o;
    o.is_var = true;
    o.var = cur_.text;
    last_end_ = cur_.end;
    advance();
    if (cur_.type == Tok::LParen) {
      advance();
      bool first = true;
      while (cur_.type != Tok::RParen) {
        if (!first) expect(Tok::Comma, "','");
        if (cur_.type != Tok::Ident) syntax_error("expected identifier argument", cur_.begin);
        o.var += "." + cur_.text;
        advance();
        first = false;
      }
      last_end_ = cur_.end;
      expect(Tok::RParen, "')'");
    }
    if (cur_.type == Tok::Prime) {
      if (!opts_.allow_primed) {
        syntax_error("primed variable not allowed in this context", cur_.begin);
      }
      o.primed = true;
      last_end_ = cur_.end;
      advance();
    }
    return o;
  }

  BoolExprPtr comparison_with_lhs(Operand lhs, std::size_t begin) {
    CmpOp op = cur_.op;
    advance();
    Operand rhs;
    if (cur_.type == Tok::Ident) {
      rhs = var_ref();
    } else {
      rhs = literal();
    }
    auto n = std::make_shared<BoolExpr>();
    n->node = BoolExpr::Node::Cmp;
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->source = strip_ws(text_.substr(begin, last_end_ - begin));
    return n;
  }

  const std::string& text_;
  Lexer lex_;
  ExprParseOptions opts_;
  Token cur_;
  std::size_t last_end_ = 0;
};

}  // namespace

BoolExprPtr parse_bool_expr(const std::string& text, const ExprParseOptions& opts) {
  Parser p(text, opts);
  return p.parse();
}

namespace {

Value resolve(const Operand& o, const Env& env) {
  if (!o.is_var) return o.lit;
  auto v = env.lookup(o.var, o.primed);
  if (!v) fail("unknown_variable", "undefined variable '" + o.var + "'");
  return *v;
}

}  // namespace

bool eval_bool_expr(const BoolExpr& e, const Env& env) {
  switch (e.node) {
    case BoolExpr::Node::True: return true;
    case BoolExpr::Node::False: return false;
    case BoolExpr::Node::Var: {
      auto v = env.lookup(e.var, e.primed);
      if (!v) fail("unknown_variable", "undefined variable '" + e.var + "'");
      if (kind_of(*v) != Kind::Bool) {
        fail("type_mismatch", "variable '" + e.var + "' used as atom but has kind " +
                                  kind_name(kind_of(*v)));
      }
      return std::get<bool>(*v);
    }
    case BoolExpr::Node::Cmp: {
      Value l = resolve(e.lhs, env);
      Value r = resolve(e.rhs, env);
      switch (e.op) {
        case CmpOp::Eq: return values_equal(l, r);
        case CmpOp::Ne: return !values_equal(l, r);
        case CmpOp::Lt: return compare_numeric(l, r) < 0;
        case CmpOp::Le: return compare_numeric(l, r) <= 0;
        case CmpOp::Gt: return compare_numeric(l, r) > 0;
        case CmpOp::Ge: return compare_numeric(l, r) >= 0;
      }
      return false;
    }
    case BoolExpr::Node::Not: return !eval_bool_expr(*e.a, env);
    case BoolExpr::Node::And: return eval_bool_expr(*e.a, env) && eval_bool_expr(*e.b, env);
    case BoolExpr::Node::Or: return eval_bool_expr(*e.a, env) || eval_bool_expr(*e.b, env);
  }
  return false;
}

std::string print_bool_expr(const BoolExpr& e) {
  switch (e.node) {
    case BoolExpr::Node::True: return "true";
    case BoolExpr::Node::False: return "false";
    case BoolExpr::Node::Var:
    case BoolExpr::Node::Cmp: return e.source;
    case BoolExpr::Node::Not: {
      bool parens = e.a->node == BoolExpr::Node::And || e.a->node == BoolExpr::Node::Or;
      return parens ? "!(" + print_bool_expr(*e.a) + ")" : "!" + print_bool_expr(*e.a);
    }
    case BoolExpr::Node::And: {
      auto side = [](const BoolExpr& c) {
        return c.node == BoolExpr::Node::Or ? "(" + print_bool_expr(c) + ")" : print_bool_expr(c);
      };
      return side(*e.a) + " & " + side(*e.b);
    }
    case BoolExpr::Node::Or: return print_bool_expr(*e.a) + " | " + print_bool_expr(*e.b);
  }
  return "?";
}

namespace {

void collect_atoms(const BoolExprPtr& e, std::vector<BoolExprPtr>& out,
                   std::unordered_set<std::string>& seen) {
  switch (e->node) {
    case BoolExpr::Node::Var:
    case BoolExpr::Node::Cmp:
      if (seen.insert(e->source).second) out.push_back(e);
      return;
    case BoolExpr::Node::Not:
      collect_atoms(e->a, out, seen);
      return;
    case BoolExpr::Node::And:
    case BoolExpr::Node::Or:
      collect_atoms(e->a, out, seen);
      collect_atoms(e->b, out, seen);
      return;
    default:
      return;
  }
}

void collect_vars(const BoolExpr& e, std::vector<VarRef>& out) {
  switch (e.node) {
    case BoolExpr::Node::Var:
      out.push_back({e.var, e.primed});
      return;
    case BoolExpr::Node::Cmp:
      if (e.lhs.is_var) out.push_back({e.lhs.var, e.lhs.primed});
      if (e.rhs.is_var) out.push_back({e.rhs.var, e.rhs.primed});
      return;
    case BoolExpr::Node::Not:
      collect_vars(*e.a, out);
      return;
    case BoolExpr::Node::And:
    case BoolExpr::Node::Or:
      collect_vars(*e.a, out);
      collect_vars(*e.b, out);
      return;
    default:
      return;
  }
}

}  // namespace

std::vector<BoolExprPtr> atoms_of(const BoolExprPtr& e) {
  std::vector<BoolExprPtr> out;
  std::unordered_set<std::string> seen;
  collect_atoms(e, out, seen);
  return out;
}

std::vector<VarRef> variables_of(const BoolExpr& e) {
  std::vector<VarRef> out;
  collect_vars(e, out);
  return out;
}

}  // namespace reachmon
