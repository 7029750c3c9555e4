#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reachmon/abstraction.hpp"
#include "reachmon/dtmc.hpp"
#include "reachmon/pctl.hpp"

namespace reachmon {

enum class StrategyKind { Stop, Reflect, UserInspection, InvokeAction };

std::string strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(const std::string& name);

// Enforcement strategies are decision payloads consumed by the host program;
// the monitor itself never executes side effects.
struct Strategy {
  StrategyKind kind = StrategyKind::Stop;
  std::string action_name;            // InvokeAction only
  std::string parameters_json = "{}"; // InvokeAction only; echoed verbatim

  std::string to_json_text() const;
  static Strategy from_json_text(const std::string& text);
};

// Why an intervention fired: the abstract state, its cached probability, and
// the bound it violated.
struct Explanation {
  SymbolicState state;
  std::string decoded;
  double probability = 0.0;
  ProbBound bound = ProbBound::Lt;
  double theta = 0.0;
  std::string property_text;
  std::uint64_t step_index = 0;
};

// Continue, or Enforce with a fully populated explanation.
struct MonitorDecision {
  bool enforce = false;
  Strategy strategy;
  std::optional<Explanation> explanation;
};

struct MonitorConfig {
  AbstractionSpec spec;
  Dtmc model;
  StateFormulaPtr property;  // top-level node must be Prob
  Labeling labeling;
  Strategy strategy;
};

// Per-state path probabilities for the property, computed once up front so
// that every runtime step is a table lookup.
struct ReachabilityCache {
  std::vector<double> values;
  std::string built_from;  // model hash + "|" + canonical property text
};

// Validates the config invariants (top-level Prob node, model space equal to
// the spec's enumeration, all atoms resolvable). Throws config_error.
void validate_monitor_config(const MonitorConfig& config);

// One solver invocation per probability operator in the property (exactly one
// for propositional operands); step() never invokes the solver afterwards.
ReachabilityCache build_cache(const MonitorConfig& config);

// Renders the host-facing payload for an Enforce decision.
std::string enforcement_payload(const MonitorDecision& decision);

class Monitor {
 public:
  explicit Monitor(MonitorConfig config);
  Monitor(MonitorConfig config, ReachabilityCache cache);

  // Abstracts the observation, looks up its cached probability, and enforces
  // iff the property's bound fails there. While tripped, returns the original
  // Enforce unchanged until acknowledge().
  MonitorDecision step(const ConcreteState& observation);

  bool tripped() const { return tripped_decision_.has_value(); }
  void acknowledge() { tripped_decision_.reset(); }

  // Arrival-ordered observations that produced Continue; enforced and
  // post-trip observations are excluded.
  const std::vector<std::pair<ConcreteState, SymbolicState>>& trajectory() const {
    return buffer_;
  }

  const ReachabilityCache& cache() const { return cache_; }
  const MonitorConfig& config() const { return config_; }
  const StateSpace& space() const { return space_; }
  std::uint64_t steps_seen() const { return steps_; }

 private:
  MonitorConfig config_;
  StateSpace space_;
  ReachabilityCache cache_;
  std::vector<std::pair<ConcreteState, SymbolicState>> buffer_;
  std::optional<MonitorDecision> tripped_decision_;
  std::uint64_t steps_ = 0;
};

}  // namespace reachmon
