#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reachmon/dtmc.hpp"
#include "reachmon/json_util.hpp"
#include "reachmon/monitor.hpp"
#include "reachmon/pctl.hpp"
#include "reachmon/trace_sim.hpp"

namespace {

using namespace reachmon;

constexpr const char* kVersion = "reachmon 1.0.0 (format 1)";

void print_json_error(const std::string& code, const std::string& message) {
  Json j;
  j["code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

std::vector<std::vector<StateId>> load_abstract_traces(const std::string& path) {
  std::string text = read_file(path);
  std::vector<std::vector<StateId>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string line =
        end == std::string::npos ? text.substr(pos) : text.substr(pos, end - pos);
    ++line_no;
    pos = end == std::string::npos ? text.size() + 1 : end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      fail("bad_trace", "line " + std::to_string(line_no) + ": malformed JSON");
    }
    if (!j.is_object() || !j.contains("states") || !j.at("states").is_array()) {
      fail("schema_violation",
           "line " + std::to_string(line_no) + ": expected object with states array");
    }
    out.push_back(j.at("states").get<std::vector<StateId>>());
  }
  return out;
}

void save_abstract_traces(const std::vector<Trace>& traces,
                          const std::vector<std::vector<SymbolicState>>& abs,
                          const std::string& path) {
  std::string out;
  for (std::size_t i = 0; i < abs.size(); ++i) {
    Json j;
    j["id"] = i < traces.size() ? traces[i].id : ("trace-" + std::to_string(i));
    std::vector<StateId> ids;
    ids.reserve(abs[i].size());
    for (const auto& s : abs[i]) ids.push_back(s.id());
    j["states"] = ids;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

StateId parse_state_id(const std::string& text) {
  std::string t = text;
  if (!t.empty() && (t[0] == 's' || t[0] == 'S')) t = t.substr(1);
  try {
    return static_cast<StateId>(std::stoull(t));
  } catch (...) {
    fail("usage", "bad state id '" + text + "'");
  }
}

Strategy parse_strategy_flag(const std::string& text, const std::string& params_json) {
  Strategy s;
  if (text == "stop") {
    s.kind = StrategyKind::Stop;
  } else if (text == "reflect") {
    s.kind = StrategyKind::Reflect;
  } else if (text == "inspect") {
    s.kind = StrategyKind::UserInspection;
  } else if (text.rfind("invoke:", 0) == 0) {
    s.kind = StrategyKind::InvokeAction;
    s.action_name = text.substr(7);
    if (s.action_name.empty()) fail("usage", "invoke strategy needs a name: invoke:<name>");
    s.parameters_json = params_json.empty() ? "{}" : params_json;
  } else {
    fail("usage", "strategy must be stop|reflect|inspect|invoke:<name>");
  }
  return s;
}

int cmd_abstract(const std::string& spec_path, const std::string& traces_path,
                 const std::string& out_path) {
  AbstractionSpec spec = load_spec(spec_path);
  std::vector<Trace> traces = load_traces(traces_path);
  std::vector<std::vector<SymbolicState>> abs = abstract_traces(traces, spec);
  save_abstract_traces(traces, abs, out_path);
  return 0;
}

int cmd_learn(const std::string& spec_path, const std::string& abs_path, double alpha,
              const std::string& out_path) {
  AbstractionSpec spec = load_spec(spec_path);
  std::vector<std::vector<StateId>> traces = load_abstract_traces(abs_path);
  CountMatrix counts = count_transitions_ids(traces, spec);
  Dtmc model = learn_dtmc(counts, spec, alpha);
  std::optional<std::size_t> initial;
  if (!traces.empty() && !traces.front().empty()) {
    initial = model.space().index_of_id(traces.front().front());
  }
  save_model(model, out_path, initial);
  return 0;
}

int cmd_pac(const std::string& spec_path, const std::string& abs_path, double epsilon,
            double delta) {
  AbstractionSpec spec = load_spec(spec_path);
  std::vector<std::vector<StateId>> traces = load_abstract_traces(abs_path);
  CountMatrix counts = count_transitions_ids(traces, spec);
  PacReport report = pac_requirement(counts, epsilon, delta);
  StateSpace space = enumerate_state_space(spec);

  Json j;
  j["epsilon"] = report.epsilon;
  j["delta"] = report.delta;
  j["delta_prime"] = report.delta_prime;
  j["m"] = report.m;
  Json states = Json::array();
  for (const auto& s : report.per_state) {
    Json row;
    row["id"] = s.id;
    row["label"] = space.label(s.index);
    row["samples"] = s.n_p;
    row["max_ratio"] = s.max_ratio;
    row["required"] = s.required;
    row["sufficient"] = s.sufficient;
    row["terminal"] = s.terminal;
    states.push_back(std::move(row));
  }
  j["states"] = std::move(states);
  j["all_sufficient"] = report.all_sufficient;
  std::cout << j.dump(2) << "\n";
  return report.all_sufficient ? 0 : 1;
}

int cmd_check(const std::string& model_path, const std::string& labels_path,
              const std::string& prop, const std::string& state_text) {
  Dtmc model = load_model(model_path);
  Labeling labels = labels_path.empty() ? Labeling{} : Labeling::load(labels_path);
  StateFormulaPtr f = parse_formula(prop);

  Json j;
  j["property"] = pretty(f);
  if (!state_text.empty()) {
    if (f->node != StateFormula::Node::Prob) {
      fail("config_error", "--state needs a probabilistic property");
    }
    StateId id = parse_state_id(state_text);
    auto idx = model.space().index_of_id(id);
    if (!idx) fail("unknown_state", "state id " + std::to_string(id) + " not in the model");
    std::vector<double> v = path_probability(model, labels, *f->path);
    double p = v[*idx];
    j["state"] = id;
    j["probability"] = p;
    j["verdict"] = bound_holds(f->bound, p, f->theta) ? "satisfied" : "violated";
  } else {
    j["satisfying"] = sat_states(model, labels, f);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_monitor(const std::string& model_path, const std::string& spec_path,
                const std::string& labels_path, const std::string& prop,
                const std::string& strategy_text, const std::string& params_json) {
  MonitorConfig cfg;
  cfg.model = load_model(model_path);
  cfg.spec = load_spec(spec_path);
  cfg.labeling = labels_path.empty() ? Labeling{} : Labeling::load(labels_path);
  cfg.property = parse_formula(prop);
  cfg.strategy = parse_strategy_flag(strategy_text, params_json);
  Monitor mon(cfg);

  const std::string strategy_name = strategy_kind_name(cfg.strategy.kind);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json in = Json::parse(line, nullptr, false);
    if (in.is_discarded()) {
      fail("bad_trace", "line " + std::to_string(line_no) + ": malformed JSON");
    }
    if (!in.is_object() || !in.contains("variables") || !in.at("variables").is_object()) {
      fail("schema_violation",
           "line " + std::to_string(line_no) + ": expected object with variables");
    }
    ConcreteState obs;
    const Json& vars = in.at("variables");
    for (auto it = vars.begin(); it != vars.end(); ++it) {
      obs.variables[it.key()] =
          value_from_json(it.value(), "line " + std::to_string(line_no) + ": '" + it.key() + "'");
    }

    bool frozen = mon.tripped();
    MonitorDecision d = mon.step(obs);
    Json out;
    out["step"] = in.value("step", Json(line_no - 1));
    out["decision"] = d.enforce ? "enforce" : "continue";
    out["strategy"] = strategy_name;
    if (d.enforce) {
      out["state_id"] = d.explanation->state.id();
      out["probability"] = d.explanation->probability;
    } else {
      (void)frozen;
      SymbolicState s = abstract(obs, cfg.spec);
      out["state_id"] = s.id();
      out["probability"] = mon.cache().values[*mon.space().index_of(s)];
    }
    out["theta"] = cfg.property->theta;
    std::cout << out.dump() << "\n";
  }
  return mon.tripped() ? 3 : 0;
}

int cmd_simulate(const std::string& domain, std::size_t n, std::size_t max_len,
                 std::uint64_t seed, const std::string& out_path,
                 const std::string& spec_out) {
  AbstractionSpec spec;
  GroundTruthChain chain;
  if (domain.rfind("file:", 0) == 0) {
    std::string model_path = domain.substr(5);
    std::string text = read_file(model_path);
    Dtmc model = model_from_json_text(text);
    std::size_t initial = model_initial_index(text).value_or(0);
    chain = chain_from_model(model, initial);
    spec = synthesize_bit_spec(model);
  } else {
    std::tie(spec, chain) = domain_by_name(domain);
  }
  std::vector<Trace> traces = sample(chain, n, max_len, seed);
  save_traces(traces, out_path);
  if (!spec_out.empty()) save_spec(spec, spec_out);
  return 0;
}

int cmd_export_dot(const std::string& model_path, const std::string& out_path) {
  Dtmc model = load_model(model_path);
  std::string dot = export_dot(model);
  if (out_path.empty()) {
    std::cout << dot;
  } else {
    write_file(out_path, dot);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-chain learning, probabilistic reachability checking, and runtime "
               "monitoring for predicate-abstracted agent traces"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string spec_path, traces_path, abs_path, out_path, model_path, labels_path;
  std::string prop, state_text, strategy_text = "stop", params_json, domain = "microwave";
  std::string spec_out;
  double alpha = 1.0, epsilon = 0.05, delta = 0.01;
  std::size_t n = 100, max_len = reachmon::kDefaultMaxLen;
  std::uint64_t seed = 0;

  CLI::App* c_abstract = app.add_subcommand("abstract", "Map concrete traces to symbolic ids");
  c_abstract->add_option("--spec", spec_path)->required();
  c_abstract->add_option("--traces", traces_path)->required();
  c_abstract->add_option("--out", out_path)->required();

  CLI::App* c_learn = app.add_subcommand("learn", "Estimate a transition matrix from symbolic traces");
  c_learn->add_option("--spec", spec_path)->required();
  c_learn->add_option("--abs", abs_path)->required();
  c_learn->add_option("--alpha", alpha);
  c_learn->add_option("--out", out_path)->required();

  CLI::App* c_pac = app.add_subcommand("pac", "Report per-state sample sufficiency");
  c_pac->add_option("--spec", spec_path)->required();
  c_pac->add_option("--abs", abs_path)->required();
  c_pac->add_option("--epsilon", epsilon);
  c_pac->add_option("--delta", delta);

  CLI::App* c_check = app.add_subcommand("check", "Evaluate a property against a model");
  c_check->add_option("--model", model_path)->required();
  c_check->add_option("--labels", labels_path);
  c_check->add_option("--prop", prop)->required();
  c_check->add_option("--state", state_text);

  CLI::App* c_monitor = app.add_subcommand("monitor", "Stream observations to decisions");
  c_monitor->add_option("--model", model_path)->required();
  c_monitor->add_option("--spec", spec_path)->required();
  c_monitor->add_option("--labels", labels_path);
  c_monitor->add_option("--prop", prop)->required();
  c_monitor->add_option("--strategy", strategy_text);
  c_monitor->add_option("--params", params_json);

  CLI::App* c_sim = app.add_subcommand("simulate", "Sample traces from a bundled or saved chain");
  c_sim->add_option("--domain", domain);
  c_sim->add_option("--n", n);
  c_sim->add_option("--max-len", max_len);
  c_sim->add_option("--seed", seed);
  c_sim->add_option("--out", out_path)->required();
  c_sim->add_option("--spec-out", spec_out);

  CLI::App* c_dot = app.add_subcommand("export-dot", "Write the model as a Graphviz digraph");
  c_dot->add_option("--model", model_path)->required();
  c_dot->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_json_error("usage", e.what());
    return 2;
  }

  try {
    if (c_abstract->parsed()) return cmd_abstract(spec_path, traces_path, out_path);
    if (c_learn->parsed()) return cmd_learn(spec_path, abs_path, alpha, out_path);
    if (c_pac->parsed()) return cmd_pac(spec_path, abs_path, epsilon, delta);
    if (c_check->parsed()) return cmd_check(model_path, labels_path, prop, state_text);
    if (c_monitor->parsed()) {
      return cmd_monitor(model_path, spec_path, labels_path, prop, strategy_text, params_json);
    }
    if (c_sim->parsed()) return cmd_simulate(domain, n, max_len, seed, out_path, spec_out);
    if (c_dot->parsed()) return cmd_export_dot(model_path, out_path);
  } catch (const reachmon::Error& e) {
    print_json_error(e.code(), e.what());
    return e.code() == "usage" ? 2 : 1;
  } catch (const std::exception& e) {
    print_json_error("internal_error", e.what());
    return 1;
  }
  return 0;
}
