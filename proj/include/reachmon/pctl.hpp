#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reachmon/dtmc.hpp"

namespace reachmon {

enum class ProbBound { Lt, Le, Ge, Gt };

std::string bound_text(ProbBound b);
// Comparison direction for 1 - p: >= theta becomes <= 1 - theta, etc.
ProbBound flip_bound(ProbBound b);
bool bound_holds(ProbBound b, double p, double theta);

struct StateFormula;
struct PathFormula;
using StateFormulaPtr = std::shared_ptr<const StateFormula>;
using PathFormulaPtr = std::shared_ptr<const PathFormula>;

struct PathFormula {
  enum class Node { Next, Until, Eventually, Globally };
  Node node = Node::Next;
  StateFormulaPtr left;   // Until lhs; operand of Next/Eventually/Globally
  StateFormulaPtr right;  // Until rhs
  std::optional<std::uint64_t> bound;  // Until step bound
};

struct StateFormula {
  enum class Node { True, Atom, Not, And, Prob };
  Node node = Node::True;
  std::string atom;
  StateFormulaPtr a, b;  // Not (a), And (a, b)
  ProbBound bound = ProbBound::Lt;
  double theta = 0.0;
  PathFormulaPtr path;
};

StateFormulaPtr make_true();
StateFormulaPtr make_atom(std::string name);
StateFormulaPtr make_not(StateFormulaPtr a);
StateFormulaPtr make_and(StateFormulaPtr a, StateFormulaPtr b);
StateFormulaPtr make_prob(ProbBound b, double theta, PathFormulaPtr path);
PathFormulaPtr make_next(StateFormulaPtr a);
PathFormulaPtr make_until(StateFormulaPtr l, StateFormulaPtr r,
                          std::optional<std::uint64_t> bound = std::nullopt);
PathFormulaPtr make_eventually(StateFormulaPtr a);
PathFormulaPtr make_globally(StateFormulaPtr a);

StateFormulaPtr parse_formula(const std::string& text);

// Canonical rewrite: Globally is eliminated through the duality
// P(b,theta)[G phi] = P(flip b, 1-theta)[F !phi]; Eventually and Until are
// already canonical. Pure function of the AST.
StateFormulaPtr normalize(const StateFormulaPtr& f);

// Canonical text of normalize(f); parse(pretty(f)) is structurally equal to
// normalize(f), with theta printed exactly.
std::string pretty(const StateFormulaPtr& f);

bool formulas_equal(const StateFormulaPtr& a, const StateFormulaPtr& b);

// Atom interpretation: an expression over predicate bits and terminal tags,
// or an explicit id set.
class Labeling {
public:
  void add_expr(const std::string& atom, const std::string& expr_text);
  void add_states(const std::string& atom, std::vector<StateId> ids);
  bool has(const std::string& atom) const;

  // Satisfaction mask in canonical index order; throws unknown_atom.
  std::vector<std::uint8_t> resolve(const std::string& atom, const StateSpace& space) const;

  static Labeling from_json_text(const std::string& text);
  std::string to_json_text() const;
  static Labeling load(const std::string& path);
  void save(const std::string& path) const;

private:
  struct Entry {
    std::optional<std::string> expr_text;
    BoolExprPtr expr;
    std::optional<std::vector<StateId>> ids;
  };
  std::vector<std::pair<std::string, Entry>> entries_;
  const Entry* find(const std::string& atom) const;
};

// Probability of reaching a target-mask state (unconstrained until). Exact 1
// on targets, exact 0 on states with no graph path, Gauss-Seidel iteration
// elsewhere (L-infinity change < 1e-10, at most 1e5 sweeps).
std::vector<double> reach_probability(const Dtmc& m, const std::vector<std::uint8_t>& target);
std::vector<double> until_probability(const Dtmc& m, const std::vector<std::uint8_t>& left,
                                      const std::vector<std::uint8_t>& right);
std::vector<double> bounded_until_probability(const Dtmc& m,
                                              const std::vector<std::uint8_t>& left,
                                              const std::vector<std::uint8_t>& right,
                                              std::uint64_t k);
std::vector<double> next_probability(const Dtmc& m, const std::vector<std::uint8_t>& target);

// Per-state probability of the path formula; the workhorse behind Prob
// nodes and the monitor cache.
std::vector<double> path_probability(const Dtmc& m, const Labeling& labeling,
                                     const PathFormula& path);

std::vector<std::uint8_t> sat_states_mask(const Dtmc& m, const Labeling& labeling,
                                          const StateFormulaPtr& f);
std::vector<StateId> sat_states(const Dtmc& m, const Labeling& labeling,
                                const StateFormulaPtr& f);

// Instrumentation: total number of solver invocations (reachability, bounded
// until, next) in this process. The monitor's cached fast path must not move
// this counter.
std::uint64_t solver_invocations();

}  // namespace reachmon
