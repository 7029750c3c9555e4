#include "reachmon/monitor.hpp"

#include <cstdio>

#include "reachmon/json_util.hpp"

namespace reachmon {

std::string strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Stop: return "stop";
    case StrategyKind::Reflect: return "reflect";
    case StrategyKind::UserInspection: return "user_inspection";
    case StrategyKind::InvokeAction: return "invoke_action";
  }
  return "stop";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
  if (name == "stop") return StrategyKind::Stop;
  if (name == "reflect") return StrategyKind::Reflect;
  if (name == "user_inspection") return StrategyKind::UserInspection;
  if (name == "invoke_action") return StrategyKind::InvokeAction;
  fail("config_error", "unknown strategy '" + name + "'");
}

std::string Strategy::to_json_text() const {
  Json j;
  j["kind"] = strategy_kind_name(kind);
  if (kind == StrategyKind::InvokeAction) {
    j["name"] = action_name;
    j["parameters"] = parse_json(parameters_json, "strategy parameters");
  }
  return j.dump();
}

Strategy Strategy::from_json_text(const std::string& text) {
  Json j = parse_json(text, "strategy");
  if (!j.is_object() || !j.contains("kind")) {
    fail("config_error", "strategy: expected object with \"kind\"");
  }
  Strategy s;
  s.kind = strategy_kind_from_name(j.at("kind").get<std::string>());
  if (s.kind == StrategyKind::InvokeAction) {
    if (!j.contains("name")) fail("config_error", "invoke_action strategy needs \"name\"");
    s.action_name = j.at("name").get<std::string>();
    s.parameters_json = j.value("parameters", Json::object()).dump();
  }
  return s;
}

namespace {

void collect_atoms(const StateFormulaPtr& f, std::vector<std::string>& out);

void collect_path_atoms(const PathFormula& p, std::vector<std::string>& out) {
  if (p.left) collect_atoms(p.left, out);
  if (p.right) collect_atoms(p.right, out);
}

void collect_atoms(const StateFormulaPtr& f, std::vector<std::string>& out) {
  switch (f->node) {
    case StateFormula::Node::True: return;
    case StateFormula::Node::Atom: out.push_back(f->atom); return;
    case StateFormula::Node::Not: collect_atoms(f->a, out); return;
    case StateFormula::Node::And:
      collect_atoms(f->a, out);
      collect_atoms(f->b, out);
      return;
    case StateFormula::Node::Prob: collect_path_atoms(*f->path, out); return;
  }
}

Json explanation_to_json(const Explanation& e) {
  Json j;
  j["state_id"] = e.state.id();
  j["decoded"] = e.decoded;
  j["probability"] = e.probability;
  j["bound"] = bound_text(e.bound);
  j["theta"] = e.theta;
  j["property"] = e.property_text;
  j["step_index"] = e.step_index;
  return j;
}

}  // namespace

void validate_monitor_config(const MonitorConfig& config) {
  if (!config.property || config.property->node != StateFormula::Node::Prob) {
    fail("config_error", "monitor property must be a single probabilistic operator");
  }
  StateSpace enumerated = enumerate_state_space(config.spec);
  if (!(config.model.space() == enumerated)) {
    fail("config_error", "model state space does not match the abstraction's enumeration");
  }
  std::vector<std::string> atoms;
  collect_atoms(config.property, atoms);
  for (const std::string& a : atoms) {
    try {
      config.labeling.resolve(a, enumerated);
    } catch (const Error& e) {
      fail("config_error", "atom '" + a + "' unusable: " + e.what());
    }
  }
}

ReachabilityCache build_cache(const MonitorConfig& config) {
  validate_monitor_config(config);
  ReachabilityCache cache;
  cache.values = path_probability(config.model, config.labeling, *config.property->path);
  cache.built_from = model_hash(config.model) + "|" + pretty(config.property);
  return cache;
}

namespace {

// Prose-friendly rendering; the exact doubles travel in the explanation JSON.
std::string round_for_prose(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string enforcement_payload(const MonitorDecision& decision) {
  if (!decision.enforce || !decision.explanation) {
    fail("config_error", "enforcement payload requested for a continue decision");
  }
  const Explanation& e = *decision.explanation;
  Json j;
  switch (decision.strategy.kind) {
    case StrategyKind::Stop:
      j["action"] = "halt";
      break;
    case StrategyKind::Reflect:
      j["action"] = "reflect";
      j["prompt"] = "From state [" + e.decoded + "] the estimated probability " +
                    round_for_prose(e.probability) + " violates the bound " +
                    bound_text(e.bound) + " " + round_for_prose(e.theta) + " for property " +
                    e.property_text + "; reconsider the planned action before continuing.";
      j["explanation"] = explanation_to_json(e);
      break;
    case StrategyKind::UserInspection:
      j["action"] = "user_inspection";
      j["approval_token"] = "approve-" + std::to_string(e.step_index) + "-" +
                            std::to_string(e.state.id());
      j["explanation"] = explanation_to_json(e);
      break;
    case StrategyKind::InvokeAction:
      j["action"] = "invoke_action";
      j["name"] = decision.strategy.action_name;
      j["parameters"] = parse_json(decision.strategy.parameters_json, "strategy parameters");
      break;
  }
  return j.dump();
}

Monitor::Monitor(MonitorConfig config)
    : config_(std::move(config)), space_(enumerate_state_space(config_.spec)) {
  cache_ = build_cache(config_);
}

Monitor::Monitor(MonitorConfig config, ReachabilityCache cache)
    : config_(std::move(config)), space_(enumerate_state_space(config_.spec)) {
  validate_monitor_config(config_);
  std::string want = model_hash(config_.model) + "|" + pretty(config_.property);
  if (cache.built_from != want) {
    fail("config_error", "cache was built for a different model or property");
  }
  if (cache.values.size() != space_.size()) {
    fail("config_error", "cache size does not match the state space");
  }
  cache_ = std::move(cache);
}

MonitorDecision Monitor::step(const ConcreteState& observation) {
  std::uint64_t index = steps_++;
  if (tripped_decision_) return *tripped_decision_;

  SymbolicState s = abstract(observation, config_.spec);
  auto state_index = space_.index_of(s);
  if (!state_index) {
    fail("unknown_state", "abstracted state id " + std::to_string(s.id()) +
                              " is not in the model's state space");
  }
  double p = cache_.values[*state_index];
  bool violated = !bound_holds(config_.property->bound, p, config_.property->theta);
  if (violated) {
    Explanation e;
    e.state = s;
    e.decoded = space_.label(*state_index);
    e.probability = p;
    e.bound = config_.property->bound;
    e.theta = config_.property->theta;
    e.property_text = pretty(config_.property);
    e.step_index = index;
    MonitorDecision d;
    d.enforce = true;
    d.strategy = config_.strategy;
    d.explanation = std::move(e);
    tripped_decision_ = d;
    return d;
  }
  buffer_.emplace_back(observation, s);
  MonitorDecision d;
  d.enforce = false;
  return d;
}

}  // namespace reachmon
