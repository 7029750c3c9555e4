#include "reachmon/pctl.hpp"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>

#include "reachmon/json_util.hpp"

namespace reachmon {

std::string bound_text(ProbBound b) {
  switch (b) {
    case ProbBound::Lt: return "<";
    case ProbBound::Le: return "<=";
    case ProbBound::Ge: return ">=";
    case ProbBound::Gt: return ">";
  }
  return "?";
}

ProbBound flip_bound(ProbBound b) {
  switch (b) {
    case ProbBound::Lt: return ProbBound::Gt;
    case ProbBound::Le: return ProbBound::Ge;
    case ProbBound::Ge: return ProbBound::Le;
    case ProbBound::Gt: return ProbBound::Lt;
  }
  return ProbBound::Lt;
}

bool bound_holds(ProbBound b, double p, double theta) {
  switch (b) {
    case ProbBound::Lt: return p < theta;
    case ProbBound::Le: return p <= theta;
    case ProbBound::Ge: return p >= theta;
    case ProbBound::Gt: return p > theta;
  }
  return false;
}

StateFormulaPtr make_true() {
  auto f = std::make_shared<StateFormula>();
  f->node = StateFormula::Node::True;
  return f;
}

StateFormulaPtr make_atom(std::string name) {
  auto f = std::make_shared<StateFormula>();
  f->node = StateFormula::Node::Atom;
  f->atom = std::move(name);
  return f;
}

StateFormulaPtr make_not(StateFormulaPtr a) {
  auto f = std::make_shared<StateFormula>();
  f->node = StateFormula::Node::Not;
  f->a = std::move(a);
  return f;
}

StateFormulaPtr make_and(StateFormulaPtr a, StateFormulaPtr b) {
  auto f = std::make_shared<StateFormula>();
  f->node = StateFormula::Node::And;
  f->a = std::move(a);
  f->b = std::move(b);
  return f;
}

StateFormulaPtr make_prob(ProbBound b, double theta, PathFormulaPtr path) {
  auto f = std::make_shared<StateFormula>();
  f->node = StateFormula::Node::Prob;
  f->bound = b;
  f->theta = theta;
  f->path = std::move(path);
  return f;
}

PathFormulaPtr make_next(StateFormulaPtr a) {
  auto p = std::make_shared<PathFormula>();
  p->node = PathFormula::Node::Next;
  p->left = std::move(a);
  return p;
}

PathFormulaPtr make_until(StateFormulaPtr l, StateFormulaPtr r,
                          std::optional<std::uint64_t> bound) {
  auto p = std::make_shared<PathFormula>();
  p->node = PathFormula::Node::Until;
  p->left = std::move(l);
  p->right = std::move(r);
  p->bound = bound;
  return p;
}

PathFormulaPtr make_eventually(StateFormulaPtr a) {
  auto p = std::make_shared<PathFormula>();
  p->node = PathFormula::Node::Eventually;
  p->left = std::move(a);
  return p;
}

PathFormulaPtr make_globally(StateFormulaPtr a) {
  auto p = std::make_shared<PathFormula>();
  p->node = PathFormula::Node::Globally;
  p->left = std::move(a);
  return p;
}

namespace {

enum class FTok { End, True, Ident, Not, And, LParen, RParen, LBracket, RBracket,
                  P, X, U, F, G, Cmp, Number };

struct FToken {
  FTok type = FTok::End;
  std::size_t begin = 0;
  std::string text;
  ProbBound op = ProbBound::Lt;
};

[[noreturn]] void fsyntax(const std::string& what, std::size_t at) {
  fail("syntax_error", what + " at byte " + std::to_string(at));
}

class FLexer {
public:
  explicit FLexer(const std::string& s) : s_(s) {}

  FToken next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    FToken t;
    t.begin = pos_;
    if (pos_ >= s_.size()) return t;
    char c = s_[pos_];
    switch (c) {
      case '(': ++pos_; t.type = FTok::LParen; return t;
      case ')': ++pos_; t.type = FTok::RParen; return t;
      case '[': ++pos_; t.type = FTok::LBracket; return t;
      case ']': ++pos_; t.type = FTok::RBracket; return t;
      case '&': ++pos_; t.type = FTok::And; return t;
      case '!': ++pos_; t.type = FTok::Not; return t;
      case '<':
        t.type = FTok::Cmp;
        if (s_.compare(pos_, 2, "<=") == 0) { t.op = ProbBound::Le; pos_ += 2; }
        else { t.op = ProbBound::Lt; ++pos_; }
        return t;
      case '>':
        t.type = FTok::Cmp;
        if (s_.compare(pos_, 2, ">=") == 0) { t.op = ProbBound::Ge; pos_ += 2; }
        else { t.op = ProbBound::Gt; ++pos_; }
        return t;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size()) {
        char k = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(k)) || k == '.') { ++pos_; continue; }
        if ((k == 'e' || k == 'E') && pos_ + 1 < s_.size() &&
            (std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) || s_[pos_ + 1] == '+' ||
             s_[pos_ + 1] == '-')) {
          pos_ += 2;
          continue;
        }
        break;
      }
      t.type = FTok::Number;
      t.text = s_.substr(start, pos_ - start);
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      t.text = s_.substr(start, pos_ - start);
      if (t.text == "true") t.type = FTok::True;
      else if (t.text == "P") t.type = FTok::P;
      else if (t.text == "X") t.type = FTok::X;
      else if (t.text == "U") t.type = FTok::U;
      else if (t.text == "F") t.type = FTok::F;
      else if (t.text == "G") t.type = FTok::G;
      else t.type = FTok::Ident;
      return t;
    }
    fsyntax(std::string("unexpected character '") + c + "'", pos_);
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

class FParser {
public:
  explicit FParser(const std::string& text) : lex_(text) { advance(); }

  StateFormulaPtr parse() {
    StateFormulaPtr f = formula();
    if (cur_.type != FTok::End) fsyntax("trailing input", cur_.begin);
    return f;
  }

private:
  void advance() { cur_ = lex_.next(); }

  void expect(FTok t, const char* what) {
    if (cur_.type != t) fsyntax(std::string("expected ") + what, cur_.begin);
    advance();
  }

  StateFormulaPtr formula() {
    StateFormulaPtr left = unary();
    while (cur_.type == FTok::And) {
      advance();
      left = make_and(left, unary());
    }
    return left;
  }

  StateFormulaPtr unary() {
    if (cur_.type == FTok::Not) {
      advance();
      return make_not(unary());
    }
    return primary();
  }

  StateFormulaPtr primary() {
    switch (cur_.type) {
      case FTok::True:
        advance();
        return make_true();
      case FTok::Ident: {
        std::string name = cur_.text;
        advance();
        return make_atom(std::move(name));
      }
      case FTok::LParen: {
        advance();
        StateFormulaPtr f = formula();
        expect(FTok::RParen, "')'");
        return f;
      }
      case FTok::P: {
        advance();
        if (cur_.type != FTok::Cmp) fsyntax("expected probability bound", cur_.begin);
        ProbBound b = cur_.op;
        advance();
        if (cur_.type != FTok::Number) fsyntax("expected threshold", cur_.begin);
        double theta = 0.0;
        {
          const std::string& txt = cur_.text;
          auto r = std::from_chars(txt.data(), txt.data() + txt.size(), theta);
          if (r.ec != std::errc() || r.ptr != txt.data() + txt.size()) {
            fsyntax("bad threshold literal", cur_.begin);
          }
          if (theta < 0.0 || theta > 1.0) {
            fail("theta_out_of_range", "threshold " + txt + " outside [0, 1] at byte " +
                                           std::to_string(cur_.begin));
          }
        }
        advance();
        expect(FTok::LBracket, "'['");
        PathFormulaPtr path = path_formula();
        expect(FTok::RBracket, "']'");
        return make_prob(b, theta, path);
      }
      default:
        fsyntax("expected state formula", cur_.begin);
    }
  }

  PathFormulaPtr path_formula() {
    if (cur_.type == FTok::X) {
      advance();
      return make_next(formula());
    }
    if (cur_.type == FTok::F) {
      advance();
      return make_eventually(formula());
    }
    if (cur_.type == FTok::G) {
      advance();
      return make_globally(formula());
    }
    StateFormulaPtr left = formula();
    if (cur_.type != FTok::U) fsyntax("expected 'U'", cur_.begin);
    advance();
    std::optional<std::uint64_t> bound;
    if (cur_.type == FTok::Cmp) {
      if (cur_.op != ProbBound::Le) fsyntax("until bound must use '<='", cur_.begin);
      advance();
      if (cur_.type != FTok::Number) fsyntax("expected step bound", cur_.begin);
      std::uint64_t k = 0;
      const std::string& txt = cur_.text;
      auto r = std::from_chars(txt.data(), txt.data() + txt.size(), k);
      if (r.ec != std::errc() || r.ptr != txt.data() + txt.size()) {
        fsyntax("step bound must be a nonnegative integer", cur_.begin);
      }
      bound = k;
      advance();
    }
    StateFormulaPtr right = formula();
    return make_until(left, right, bound);
  }

  FLexer lex_;
  FToken cur_;
};

}  // namespace

StateFormulaPtr parse_formula(const std::string& text) {
  FParser p(text);
  return p.parse();
}

StateFormulaPtr normalize(const StateFormulaPtr& f) {
  switch (f->node) {
    case StateFormula::Node::True:
    case StateFormula::Node::Atom:
      return f;
    case StateFormula::Node::Not:
      return make_not(normalize(f->a));
    case StateFormula::Node::And:
      return make_and(normalize(f->a), normalize(f->b));
    case StateFormula::Node::Prob: {
      const PathFormula& p = *f->path;
      switch (p.node) {
        case PathFormula::Node::Next:
          return make_prob(f->bound, f->theta, make_next(normalize(p.left)));
        case PathFormula::Node::Until:
          return make_prob(f->bound, f->theta,
                           make_until(normalize(p.left), normalize(p.right), p.bound));
        case PathFormula::Node::Eventually:
          return make_prob(f->bound, f->theta, make_eventually(normalize(p.left)));
        case PathFormula::Node::Globally:
          // P(b,t)[G phi] = P(flip b, 1-t)[F !phi]
          return make_prob(flip_bound(f->bound), 1.0 - f->theta,
                           make_eventually(make_not(normalize(p.left))));
      }
      return f;
    }
  }
  return f;
}

namespace {

std::string print_state(const StateFormula& f);

std::string print_path(const PathFormula& p) {
  switch (p.node) {
    case PathFormula::Node::Next:
      return "X " + print_state(*p.left);
    case PathFormula::Node::Eventually:
      return "F " + print_state(*p.left);
    case PathFormula::Node::Globally:
      return "G " + print_state(*p.left);
    case PathFormula::Node::Until: {
      std::string u = "U";
      if (p.bound) u += "<=" + std::to_string(*p.bound);
      return print_state(*p.left) + " " + u + " " + print_state(*p.right);
    }
  }
  return "?";
}

std::string print_state(const StateFormula& f) {
  switch (f.node) {
    case StateFormula::Node::True:
      return "true";
    case StateFormula::Node::Atom:
      return f.atom;
    case StateFormula::Node::Not: {
      bool parens = f.a->node == StateFormula::Node::And;
      return parens ? "!(" + print_state(*f.a) + ")" : "!" + print_state(*f.a);
    }
    case StateFormula::Node::And: {
      std::string l = print_state(*f.a);
      std::string r = f.b->node == StateFormula::Node::And ? "(" + print_state(*f.b) + ")"
                                                           : print_state(*f.b);
      return l + " & " + r;
    }
    case StateFormula::Node::Prob:
      return "P" + bound_text(f.bound) + format_double(f.theta) + " [ " + print_path(*f.path) +
             " ]";
  }
  return "?";
}

}  // namespace

std::string pretty(const StateFormulaPtr& f) { return print_state(*normalize(f)); }

bool formulas_equal(const StateFormulaPtr& a, const StateFormulaPtr& b) {
  if (!a || !b) return a == b;
  if (a->node != b->node) return false;
  switch (a->node) {
    case StateFormula::Node::True:
      return true;
    case StateFormula::Node::Atom:
      return a->atom == b->atom;
    case StateFormula::Node::Not:
      return formulas_equal(a->a, b->a);
    case StateFormula::Node::And:
      return formulas_equal(a->a, b->a) && formulas_equal(a->b, b->b);
    case StateFormula::Node::Prob: {
      if (a->bound != b->bound || a->theta != b->theta) return false;
      const PathFormula& pa = *a->path;
      const PathFormula& pb = *b->path;
      if (pa.node != pb.node || pa.bound != pb.bound) return false;
      if (!formulas_equal(pa.left, pb.left)) return false;
      if (pa.node == PathFormula::Node::Until && !formulas_equal(pa.right, pb.right)) return false;
      return true;
    }
  }
  return false;
}

void Labeling::add_expr(const std::string& atom, const std::string& expr_text) {
  Entry e;
  e.expr_text = expr_text;
  e.expr = parse_bool_expr(expr_text);
  entries_.emplace_back(atom, std::move(e));
}

void Labeling::add_states(const std::string& atom, std::vector<StateId> ids) {
  Entry e;
  e.ids = std::move(ids);
  entries_.emplace_back(atom, std::move(e));
}

bool Labeling::has(const std::string& atom) const { return find(atom) != nullptr; }

const Labeling::Entry* Labeling::find(const std::string& atom) const {
  for (const auto& [name, entry] : entries_) {
    if (name == atom) return &entry;
  }
  return nullptr;
}

std::vector<std::uint8_t> Labeling::resolve(const std::string& atom,
                                            const StateSpace& space) const {
  const Entry* e = find(atom);
  if (!e) fail("unknown_atom", "no labeling for atom '" + atom + "'");
  std::vector<std::uint8_t> mask(space.size(), 0);
  if (e->ids) {
    for (StateId id : *e->ids) {
      auto idx = space.index_of_id(id);
      if (!idx) {
        fail("unknown_state", "labeling for '" + atom + "' names state id " +
                                  std::to_string(id) + " outside the space");
      }
      mask[*idx] = 1;
    }
    return mask;
  }
  BitNameTable table(space.predicate_names, space.terminal_tags);
  for (std::size_t i = 0; i < space.size(); ++i) {
    SymbolicEnv env(table, &space.at(i), nullptr, true);
    if (eval_bool_expr(*e->expr, env)) mask[i] = 1;
  }
  return mask;
}

Labeling Labeling::from_json_text(const std::string& text) {
  Json j = parse_json(text, "labeling");
  if (!j.is_object()) fail("schema_violation", "labeling: expected object");
  Labeling lab;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const Json& v = it.value();
    if (v.is_object() && v.contains("expr")) {
      lab.add_expr(it.key(), v.at("expr").get<std::string>());
    } else if (v.is_object() && v.contains("states")) {
      lab.add_states(it.key(), v.at("states").get<std::vector<StateId>>());
    } else {
      fail("schema_violation", "labeling for '" + it.key() + "' needs expr or states");
    }
  }
  return lab;
}

std::string Labeling::to_json_text() const {
  Json j = Json::object();
  for (const auto& [name, e] : entries_) {
    if (e.ids) {
      j[name] = Json{{"states", *e.ids}};
    } else {
      j[name] = Json{{"expr", *e.expr_text}};
    }
  }
  return j.dump(2) + "\n";
}

Labeling Labeling::load(const std::string& path) { return from_json_text(read_file(path)); }

void Labeling::save(const std::string& path) const { write_file(path, to_json_text()); }

namespace {

std::atomic<std::uint64_t> g_solver_calls{0};

constexpr double kTol = 1e-10;
constexpr std::uint64_t kMaxSweeps = 100000;

}  // namespace

std::uint64_t solver_invocations() { return g_solver_calls.load(); }

std::vector<double> until_probability(const Dtmc& m, const std::vector<std::uint8_t>& left,
                                      const std::vector<std::uint8_t>& right) {
  ++g_solver_calls;
  std::size_t K = m.size();
  std::vector<double> x(K, 0.0);
  std::vector<std::uint8_t> known(K, 0);
  for (std::size_t i = 0; i < K; ++i) {
    if (right[i]) {
      x[i] = 1.0;
      known[i] = 1;
    } else if (!left[i]) {
      known[i] = 1;  // outside left U right: probability 0 exactly
    }
  }

  // States with no graph path to a target through allowed states get exact 0.
  std::vector<std::uint8_t> can(K, 0);
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < K; ++i) {
    if (right[i]) {
      can[i] = 1;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    std::size_t q = frontier.front();
    frontier.pop_front();
    for (std::size_t p = 0; p < K; ++p) {
      if (!known[p] && !can[p] && m.p(p, q) > 0.0) {
        can[p] = 1;
        frontier.push_back(p);
      }
    }
  }
  std::vector<std::size_t> unknowns;
  for (std::size_t i = 0; i < K; ++i) {
    if (!known[i]) {
      if (!can[i]) {
        known[i] = 1;  // x stays exactly 0
      } else {
        unknowns.push_back(i);
      }
    }
  }

  double delta = 0.0;
  for (std::uint64_t iter = 0; iter < kMaxSweeps; ++iter) {
    delta = 0.0;
    for (std::size_t s : unknowns) {
      double nv = 0.0;
      for (std::size_t q = 0; q < K; ++q) nv += m.p(s, q) * x[q];
      delta = std::max(delta, std::abs(nv - x[s]));
      x[s] = nv;
    }
    if (delta < kTol) return x;
  }
  if (!unknowns.empty()) {
    fail("convergence_failure", "reachability iteration did not converge after " +
                                    std::to_string(kMaxSweeps) + " sweeps, residual " +
                                    format_double(delta));
  }
  return x;
}

std::vector<double> reach_probability(const Dtmc& m, const std::vector<std::uint8_t>& target) {
  std::vector<std::uint8_t> all(m.size(), 1);
  return until_probability(m, all, target);
}

std::vector<double> bounded_until_probability(const Dtmc& m,
                                              const std::vector<std::uint8_t>& left,
                                              const std::vector<std::uint8_t>& right,
                                              std::uint64_t k) {
  ++g_solver_calls;
  std::size_t K = m.size();
  std::vector<double> x(K, 0.0);
  for (std::size_t i = 0; i < K; ++i) x[i] = right[i] ? 1.0 : 0.0;
  std::vector<double> next(K, 0.0);
  for (std::uint64_t step = 0; step < k; ++step) {
    for (std::size_t s = 0; s < K; ++s) {
      if (right[s]) {
        next[s] = 1.0;
      } else if (!left[s]) {
        next[s] = 0.0;
      } else {
        double nv = 0.0;
        for (std::size_t q = 0; q < K; ++q) nv += m.p(s, q) * x[q];
        next[s] = nv;
      }
    }
    x.swap(next);
  }
  return x;
}

std::vector<double> next_probability(const Dtmc& m, const std::vector<std::uint8_t>& target) {
  ++g_solver_calls;
  std::size_t K = m.size();
  std::vector<double> x(K, 0.0);
  for (std::size_t s = 0; s < K; ++s) {
    double nv = 0.0;
    for (std::size_t q = 0; q < K; ++q) {
      if (target[q]) nv += m.p(s, q);
    }
    x[s] = nv;
  }
  return x;
}

std::vector<double> path_probability(const Dtmc& m, const Labeling& labeling,
                                     const PathFormula& path) {
  switch (path.node) {
    case PathFormula::Node::Next:
      return next_probability(m, sat_states_mask(m, labeling, path.left));
    case PathFormula::Node::Until: {
      std::vector<std::uint8_t> l = sat_states_mask(m, labeling, path.left);
      std::vector<std::uint8_t> r = sat_states_mask(m, labeling, path.right);
      if (path.bound) return bounded_until_probability(m, l, r, *path.bound);
      return until_probability(m, l, r);
    }
    case PathFormula::Node::Eventually:
      return reach_probability(m, sat_states_mask(m, labeling, path.left));
    case PathFormula::Node::Globally: {
      std::vector<std::uint8_t> mask = sat_states_mask(m, labeling, path.left);
      for (auto& b : mask) b = b ? 0 : 1;
      std::vector<double> v = reach_probability(m, mask);
      for (auto& p : v) p = 1.0 - p;
      return v;
    }
  }
  fail("config_error", "unhandled path formula");
}

std::vector<std::uint8_t> sat_states_mask(const Dtmc& m, const Labeling& labeling,
                                          const StateFormulaPtr& f) {
  std::size_t K = m.size();
  switch (f->node) {
    case StateFormula::Node::True:
      return std::vector<std::uint8_t>(K, 1);
    case StateFormula::Node::Atom:
      return labeling.resolve(f->atom, m.space());
    case StateFormula::Node::Not: {
      auto mask = sat_states_mask(m, labeling, f->a);
      for (auto& b : mask) b = b ? 0 : 1;
      return mask;
    }
    case StateFormula::Node::And: {
      auto a = sat_states_mask(m, labeling, f->a);
      auto b = sat_states_mask(m, labeling, f->b);
      for (std::size_t i = 0; i < K; ++i) a[i] = a[i] && b[i];
      return a;
    }
    case StateFormula::Node::Prob: {
      std::vector<double> v = path_probability(m, labeling, *f->path);
      std::vector<std::uint8_t> mask(K, 0);
      for (std::size_t i = 0; i < K; ++i) {
        mask[i] = bound_holds(f->bound, v[i], f->theta) ? 1 : 0;
      }
      return mask;
    }
  }
  fail("config_error", "unhandled state formula");
}

std::vector<StateId> sat_states(const Dtmc& m, const Labeling& labeling,
                                const StateFormulaPtr& f) {
  std::vector<std::uint8_t> mask = sat_states_mask(m, labeling, f);
  std::vector<StateId> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(m.space().at(i).id());
  }
  return out;
}

}  // namespace reachmon
