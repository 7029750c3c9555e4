#include "reachmon/trace_sim.hpp"

#include <random>

#include "reachmon/json_util.hpp"

namespace reachmon {

std::vector<ConcreteState> Trace::states() const {
  std::vector<ConcreteState> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.state);
  return out;
}

namespace {

Json state_to_json(const ConcreteState& s) {
  Json j = Json::object();
  for (const auto& [name, value] : s.variables) j[name] = value_to_json(value);
  return j;
}

ConcreteState state_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) fail("schema_violation", where + ": state must be an object");
  ConcreteState s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    s.variables[it.key()] = value_from_json(it.value(), where + ": variable '" + it.key() + "'");
  }
  return s;
}

Json trace_to_json(const Trace& t) {
  Json j = Json::object();
  j["id"] = t.id;
  j["meta"] = Json{{"instruction", t.meta.instruction},
                   {"env", t.meta.env},
                   {"seed", t.meta.seed}};
  Json steps = Json::array();
  for (const auto& step : t.steps) {
    steps.push_back(Json{{"action", step.action}, {"state", state_to_json(step.state)}});
  }
  j["steps"] = std::move(steps);
  if (t.outcome) j["outcome"] = *t.outcome;
  return j;
}

Trace trace_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) fail("schema_violation", where + ": trace must be an object");
  Trace t;
  if (!j.contains("id") || !j.at("id").is_string()) {
    fail("schema_violation", where + ": missing string id");
  }
  t.id = j.at("id").get<std::string>();
  const Json& meta = j.value("meta", Json::object());
  if (!meta.is_object()) fail("schema_violation", where + ": meta must be an object");
  t.meta.instruction = meta.value("instruction", std::string());
  t.meta.env = meta.value("env", std::string());
  if (meta.contains("seed")) {
    if (!meta.at("seed").is_number_integer() && !meta.at("seed").is_number_unsigned()) {
      fail("schema_violation", where + ": seed must be an integer");
    }
    t.meta.seed = meta.at("seed").get<std::uint64_t>();
  }
  if (!j.contains("steps") || !j.at("steps").is_array()) {
    fail("schema_violation", where + ": missing steps array");
  }
  for (const auto& s : j.at("steps")) {
    if (!s.is_object() || !s.contains("action") || !s.contains("state")) {
      fail("schema_violation", where + ": each step needs action and state");
    }
    TraceStep step;
    step.action = s.at("action").get<std::string>();
    step.state = state_from_json(s.at("state"), where);
    t.steps.push_back(std::move(step));
  }
  if (t.steps.empty()) fail("schema_violation", where + ": steps must be nonempty");
  if (j.contains("outcome")) {
    std::string o = j.at("outcome").get<std::string>();
    if (o != "finished" && o != "truncated") {
      fail("schema_violation", where + ": outcome must be finished or truncated");
    }
    t.outcome = o;
  }
  return t;
}

}  // namespace

std::string traces_to_jsonl(const std::vector<Trace>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += trace_to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<Trace> traces_from_jsonl(const std::string& text) {
  std::vector<Trace> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string line =
        end == std::string::npos ? text.substr(pos) : text.substr(pos, end - pos);
    ++line_no;
    pos = end == std::string::npos ? text.size() + 1 : end + 1;
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) continue;
    std::string where = "line " + std::to_string(line_no);
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) fail("bad_trace", where + ": malformed JSON");
    out.push_back(trace_from_json(j, where));
  }
  return out;
}

std::vector<Trace> load_traces(const std::string& path) {
  return traces_from_jsonl(read_file(path));
}

void save_traces(const std::vector<Trace>& traces, const std::string& path) {
  write_file(path, traces_to_jsonl(traces));
}

std::uint64_t trace_stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 output number (index + 1) for the given initial state.
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::size_t draw_row(const Dtmc& m, std::size_t row, std::mt19937_64& eng) {
  double u = uniform01(eng);
  double acc = 0.0;
  std::size_t last_positive = row;  // self by default; rows are stochastic
  for (std::size_t q = 0; q < m.size(); ++q) {
    double p = m.p(row, q);
    if (p <= 0.0) continue;
    last_positive = q;
    acc += p;
    if (u < acc) return q;
  }
  return last_positive;
}

}  // namespace

std::vector<Trace> sample(const GroundTruthChain& chain, std::size_t n_traces,
                          std::size_t max_len, std::uint64_t seed) {
  const Dtmc& m = chain.generator;
  if (chain.emissions.size() != m.size()) {
    fail("config_error", "chain needs one emission per state");
  }
  if (chain.initial_index >= m.size()) fail("config_error", "initial state out of range");
  if (max_len == 0) fail("config_error", "max length must allow the initial state");

  const StateSpace& space = m.space();
  std::vector<Trace> traces;
  traces.reserve(n_traces);
  for (std::size_t i = 0; i < n_traces; ++i) {
    std::uint64_t stream = trace_stream_seed(seed, i);
    std::mt19937_64 eng(stream);
    Trace t;
    t.id = "trace-" + std::to_string(seed) + "-" + std::to_string(i);
    t.meta.instruction = chain.instruction;
    t.meta.env = chain.env;
    t.meta.seed = stream;

    std::size_t cur = chain.initial_index;
    t.steps.push_back(TraceStep{"start", chain.emissions[cur]});
    while (!space.at(cur).is_terminal() && t.steps.size() < max_len) {
      std::size_t next = draw_row(m, cur, eng);
      t.steps.push_back(TraceStep{"goto:s" + std::to_string(space.at(next).id()),
                                  chain.emissions[next]});
      cur = next;
    }
    t.outcome = space.at(cur).is_terminal() ? "finished" : "truncated";
    traces.push_back(std::move(t));
  }
  return traces;
}

namespace {

ConcreteState make_state(std::initializer_list<std::pair<const char*, Value>> vars) {
  ConcreteState s;
  for (const auto& [name, value] : vars) s.variables[name] = value;
  return s;
}

}  // namespace

std::pair<AbstractionSpec, GroundTruthChain> microwave_domain() {
  AbstractionSpec spec = spec_from_json_text(R"json({
    "variables": {
      "is_inside.fork.microwave": "bool",
      "is_toggled.microwave": "bool",
      "finished": "bool"
    },
    "predicates": [
      {"name": "fork_inside", "expr": "is_inside(fork, microwave)"},
      {"name": "toggled", "expr": "is_toggled(microwave)"}
    ],
    "terminals": ["finished"],
    "transition_rules": ["!(!fork_inside & toggled & fork_inside' & toggled')"]
  })json");

  // Entries chosen so reach(unsafe) is 0.04 from idle and 0.34 from
  // fork-inside, with idle -> toggled mass 31/184 (see tools/derive_microwave_chain.py).
  const double r01 = 1.0 / 17.0;
  const double r02 = 31.0 / 184.0;
  std::vector<std::vector<double>> rows = {
      {0.5, r01, r02, 0.0, 1.0 - 0.5 - r01 - r02},  // idle
      {0.2, 0.3, 0.0, 0.23, 0.27},                  // fork inside, off
      {0.0, 0.0, 0.4, 0.0, 0.6},                    // toggled, no fork
      {0.0, 0.0, 0.0, 0.0, 1.0},                    // unsafe: run ends
      {0.0, 0.0, 0.0, 0.0, 1.0},                    // finished (absorbing)
  };
  GroundTruthChain chain;
  chain.generator = Dtmc::from_rows(enumerate_state_space(spec), rows, spec_hash(spec));
  chain.initial_index = 0;
  chain.emissions = {
      make_state({{"is_inside.fork.microwave", false},
                  {"is_toggled.microwave", false},
                  {"finished", false}}),
      make_state({{"is_inside.fork.microwave", true},
                  {"is_toggled.microwave", false},
                  {"finished", false}}),
      make_state({{"is_inside.fork.microwave", false},
                  {"is_toggled.microwave", true},
                  {"finished", false}}),
      make_state({{"is_inside.fork.microwave", true},
                  {"is_toggled.microwave", true},
                  {"finished", false}}),
      make_state({{"is_inside.fork.microwave", false},
                  {"is_toggled.microwave", false},
                  {"finished", true}}),
  };
  chain.instruction = "Heat the soup; never run the microwave with a fork inside.";
  chain.env = "kitchen";
  return {std::move(spec), std::move(chain)};
}

std::pair<AbstractionSpec, GroundTruthChain> intersection_domain() {
  AbstractionSpec spec = spec_from_json_text(R"json({
    "variables": {
      "npc_ahead": "bool",
      "speed": "real",
      "collision": "bool",
      "destination": "bool"
    },
    "predicates": [
      {"name": "priority_npc", "expr": "npc_ahead"},
      {"name": "fast", "expr": "speed >= 30"}
    ],
    "terminals": ["collision", "destination"]
  })json");

  std::vector<std::vector<double>> rows = {
      {0.30, 0.10, 0.40, 0.05, 0.05, 0.10},
      {0.20, 0.30, 0.05, 0.20, 0.15, 0.10},
      {0.10, 0.05, 0.35, 0.15, 0.10, 0.25},
      {0.05, 0.10, 0.10, 0.25, 0.30, 0.20},
      {0.0, 0.0, 0.0, 0.0, 1.0, 0.0},
      {0.0, 0.0, 0.0, 0.0, 0.0, 1.0},
  };
  GroundTruthChain chain;
  chain.generator = Dtmc::from_rows(enumerate_state_space(spec), rows, spec_hash(spec));
  chain.initial_index = 0;
  auto emit = [&](bool npc, bool fast_bit) {
    return make_state({{"npc_ahead", npc},
                       {"speed", fast_bit ? 45.0 : 12.0},
                       {"collision", false},
                       {"destination", false}});
  };
  chain.emissions = {
      emit(false, false),
      emit(true, false),
      emit(false, true),
      emit(true, true),
      make_state({{"npc_ahead", false}, {"speed", 0.0}, {"collision", true},
                  {"destination", false}}),
      make_state({{"npc_ahead", false}, {"speed", 0.0}, {"collision", false},
                  {"destination", true}}),
  };
  chain.instruction = "Cross the intersection and reach the destination without a collision.";
  chain.env = "intersection";
  return {std::move(spec), std::move(chain)};
}

std::pair<AbstractionSpec, GroundTruthChain> cliffwalk_domain() {
  AbstractionSpec spec = spec_from_json_text(R"json({
    "variables": {
      "dist": "int",
      "fell": "bool",
      "home": "bool"
    },
    "predicates": [
      {"name": "near_edge", "expr": "dist <= 1"}
    ],
    "terminals": ["fell", "home"]
  })json");

  // Dyadic entries keep the reach probabilities exact: 0.5 from the edge,
  // 0.25 from safe ground.
  std::vector<std::vector<double>> rows = {
      {0.5, 0.25, 0.0, 0.25},
      {0.0, 0.5, 0.25, 0.25},
      {0.0, 0.0, 1.0, 0.0},
      {0.0, 0.0, 0.0, 1.0},
  };
  GroundTruthChain chain;
  chain.generator = Dtmc::from_rows(enumerate_state_space(spec), rows, spec_hash(spec));
  chain.initial_index = 0;
  chain.emissions = {
      make_state({{"dist", std::int64_t{5}}, {"fell", false}, {"home", false}}),
      make_state({{"dist", std::int64_t{1}}, {"fell", false}, {"home", false}}),
      make_state({{"dist", std::int64_t{0}}, {"fell", true}, {"home", false}}),
      make_state({{"dist", std::int64_t{5}}, {"fell", false}, {"home", true}}),
  };
  chain.instruction = "Walk home along the cliff path without falling.";
  chain.env = "cliffside";
  return {std::move(spec), std::move(chain)};
}

std::pair<AbstractionSpec, GroundTruthChain> domain_by_name(const std::string& name) {
  if (name == "microwave") return microwave_domain();
  if (name == "intersection") return intersection_domain();
  if (name == "cliffwalk") return cliffwalk_domain();
  fail("config_error", "unknown domain '" + name + "'");
}

AbstractionSpec synthesize_bit_spec(const Dtmc& model) {
  const StateSpace& space = model.space();
  Json j = Json::object();
  Json vars = Json::object();
  for (std::size_t i = 0; i < space.k; ++i) vars["b" + std::to_string(i)] = "bool";
  for (const auto& tag : space.terminal_tags) vars[tag] = "bool";
  j["variables"] = std::move(vars);
  Json preds = Json::array();
  for (std::size_t i = 0; i < space.k; ++i) {
    preds.push_back(Json{{"name", space.predicate_names[i]},
                         {"expr", "b" + std::to_string(i)}});
  }
  j["predicates"] = std::move(preds);
  j["terminals"] = space.terminal_tags;
  return spec_from_json_text(j.dump());
}

GroundTruthChain chain_from_model(const Dtmc& model, std::size_t initial_index) {
  const StateSpace& space = model.space();
  GroundTruthChain chain;
  chain.generator = model;
  chain.initial_index = initial_index;
  chain.emissions.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const SymbolicState& s = space.at(i);
    ConcreteState c;
    for (std::size_t b = 0; b < space.k; ++b) {
      c.variables["b" + std::to_string(b)] = !s.is_terminal() && s.bit(b);
    }
    for (std::size_t t = 0; t < space.terminal_tags.size(); ++t) {
      c.variables[space.terminal_tags[t]] = s.is_terminal() && s.terminal_index() == t;
    }
    chain.emissions.push_back(std::move(c));
  }
  chain.instruction = "Replay of a saved model.";
  chain.env = "model";
  return chain;
}

std::vector<std::vector<SymbolicState>> abstract_traces(const std::vector<Trace>& traces,
                                                        const AbstractionSpec& spec) {
  std::vector<std::vector<SymbolicState>> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(abstract_trace(t.states(), spec));
  return out;
}

}  // namespace reachmon
