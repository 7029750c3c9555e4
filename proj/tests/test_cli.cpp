#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "oracles.hpp"
#include "reachmon/json_util.hpp"
#include "reachmon/monitor.hpp"
#include "reachmon/trace_sim.hpp"

using namespace reachmon;
using namespace testutil;

namespace {

std::string cli() { return shell_quote(REACHMON_CLI_PATH); }

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::path("/tmp") /
          ("reachmon_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter()++));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

Json error_json(const std::string& merged_output) {
  return Json::parse(merged_output);
}

// concrete observations for the household states, as NDJSON monitor input
std::string obs_line(int step, bool fork, bool toggled, bool finished = false) {
  Json j;
  j["step"] = step;
  j["variables"] = Json{{"is_inside.fork.microwave", fork},
                        {"is_toggled.microwave", toggled},
                        {"finished", finished}};
  return j.dump();
}

}  // namespace

TEST_CASE("version flag reports the tool and format version") {
  ProcResult r = run_process(cli() + " --version");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("reachmon 1.0.0 (format 1)") != std::string::npos);
}

TEST_CASE("usage problems exit 2 with a machine-readable error") {
  ProcResult none = run_process(cli() + " 2>&1");
  CHECK(none.exit_code == 2);
  CHECK(error_json(none.out)["code"] == "usage");

  ProcResult bad = run_process(cli() + " frobnicate 2>&1");
  CHECK(bad.exit_code == 2);
  CHECK(error_json(bad.out)["code"] == "usage");

  ProcResult missing = run_process(cli() + " learn --alpha 1.0 2>&1");
  CHECK(missing.exit_code == 2);
  CHECK(error_json(missing.out)["code"] == "usage");
}

TEST_CASE("simulate, abstract, and learn compose bit-for-bit with the library") {
  TempDir tmp;
  std::string traces = tmp / "traces.jsonl";
  std::string spec_path = tmp / "spec.json";
  std::string abs_path = tmp / "abs.jsonl";
  std::string model_path = tmp / "model.json";

  ProcResult sim = run_process(cli() + " simulate --domain microwave --n 200 --max-len 60" +
                               " --seed 5 --out " + shell_quote(traces) + " --spec-out " +
                               shell_quote(spec_path));
  REQUIRE(sim.exit_code == 0);

  // the CLI wrote exactly the library's sampler output
  auto [spec, chain] = microwave_domain();
  CHECK(read_file(traces) == traces_to_jsonl(sample(chain, 200, 60, 5)));
  CHECK(read_file(spec_path) == spec_to_json_text(spec));

  // deterministic: a second run writes identical bytes
  std::string traces2 = tmp / "traces2.jsonl";
  run_process(cli() + " simulate --domain microwave --n 200 --max-len 60 --seed 5 --out " +
              shell_quote(traces2));
  CHECK(read_file(traces2) == read_file(traces));

  ProcResult abs = run_process(cli() + " abstract --spec " + shell_quote(spec_path) +
                               " --traces " + shell_quote(traces) + " --out " +
                               shell_quote(abs_path));
  REQUIRE(abs.exit_code == 0);
  Json first = Json::parse(read_file(abs_path).substr(0, read_file(abs_path).find('\n')));
  CHECK(first.contains("id"));
  CHECK(first.at("states").is_array());

  ProcResult learn = run_process(cli() + " learn --spec " + shell_quote(spec_path) +
                                 " --abs " + shell_quote(abs_path) + " --alpha 1.0 --out " +
                                 shell_quote(model_path));
  REQUIRE(learn.exit_code == 0);

  auto sampled = sample(chain, 200, 60, 5);
  CountMatrix counts = count_transitions(abstract_traces(sampled, spec), spec);
  Dtmc expected = learn_dtmc(counts, spec, 1.0);
  CHECK(read_file(model_path) == model_to_json_text(expected, 0));
}

TEST_CASE("abstract maps an empty trace file to an empty output") {
  TempDir tmp;
  auto [spec, chain] = microwave_domain();
  std::string spec_path = tmp / "spec.json";
  write_file(spec_path, spec_to_json_text(spec));
  std::string traces = tmp / "none.jsonl";
  write_file(traces, "");
  std::string out = tmp / "abs.jsonl";
  ProcResult r = run_process(cli() + " abstract --spec " + shell_quote(spec_path) +
                             " --traces " + shell_quote(traces) + " --out " + shell_quote(out));
  CHECK(r.exit_code == 0);
  CHECK(read_file(out).empty());
}

TEST_CASE("pac reports the sample requirement and gates the exit code") {
  TempDir tmp;
  // ten-state space: three predicate bits plus two terminals
  write_file(tmp / "spec.json", R"json({
    "variables": {"a": "bool", "b": "bool", "c": "bool", "done": "bool", "dead": "bool"},
    "predicates": [{"name": "a", "expr": "a"}, {"name": "b", "expr": "b"},
                   {"name": "c", "expr": "c"}],
    "terminals": ["done", "dead"]
  })json");

  // 400 departures from state 5, five successors at 80 each
  std::string lines;
  int id = 0;
  for (int target : {1, 2, 3, 4, 6}) {
    for (int rep = 0; rep < 80; ++rep) {
      lines += R"({"id":"t)" + std::to_string(id++) + R"(","states":[5,)" +
               std::to_string(target) + "]}\n";
    }
  }
  write_file(tmp / "abs.jsonl", lines);

  ProcResult r = run_process(cli() + " pac --spec " + shell_quote(tmp / "spec.json") +
                             " --abs " + shell_quote(tmp / "abs.jsonl") +
                             " --epsilon 0.05 --delta 0.01");
  CHECK(r.exit_code == 1);  // more samples must be collected
  Json report = Json::parse(r.out);
  CHECK(report["m"] == 10);
  CHECK(report["all_sufficient"] == false);
  const Json& s5 = report["states"][5];
  CHECK(s5["samples"] == 400);
  CHECK(s5["max_ratio"] == 0.2);
  CHECK(s5["required"].get<double>() >= 1086.0);
  CHECK(s5["required"].get<double>() <= 1089.0);
  CHECK(s5["sufficient"] == false);

  // a saturated two-state system passes and exits zero
  write_file(tmp / "spec2.json", R"json({
    "variables": {"x": "bool"},
    "predicates": [{"name": "x", "expr": "x"}]
  })json");
  std::string walk = R"({"id":"w","states":[)";
  for (int i = 0; i < 2400; ++i) walk += (i % 2 == 0 ? "0," : "1,");
  walk.back() = ']';
  walk += "}\n";
  write_file(tmp / "abs2.jsonl", walk);
  ProcResult ok = run_process(cli() + " pac --spec " + shell_quote(tmp / "spec2.json") +
                              " --abs " + shell_quote(tmp / "abs2.jsonl") +
                              " --epsilon 0.05 --delta 0.01");
  CHECK(ok.exit_code == 0);
  CHECK(Json::parse(ok.out)["all_sufficient"] == true);
}

TEST_CASE("check prints satisfying states or a per-state verdict") {
  TempDir tmp;
  auto [spec, chain] = microwave_domain();
  write_file(tmp / "model.json", model_to_json_text(chain.generator, 0));
  Labeling lab;
  lab.add_expr("unsafe", "fork_inside & toggled");
  lab.save(tmp / "labels.json");

  std::string base = cli() + " check --model " + shell_quote(tmp / "model.json") +
                     " --labels " + shell_quote(tmp / "labels.json") +
                     " --prop 'P<0.05 [ F unsafe ]'";
  ProcResult all = run_process(base);
  REQUIRE(all.exit_code == 0);
  Json sat = Json::parse(all.out);
  CHECK(sat["property"] == "P<0.05 [ F unsafe ]");
  CHECK(sat["satisfying"] == Json::array({0, 2, 4}));

  ProcResult one = run_process(base + " --state s0");
  REQUIRE(one.exit_code == 0);
  Json v = Json::parse(one.out);
  CHECK(v["state"] == 0);
  CHECK(v["verdict"] == "satisfied");
  double expected =
      path_probability(chain.generator, lab, *parse_formula("P<0.05 [ F unsafe ]")->path)[0];
  CHECK(v["probability"].get<double>() == expected);  // the CLI adds no rounding

  ProcResult worse = run_process(base + " --state s1");
  CHECK(Json::parse(worse.out)["verdict"] == "violated");
}

TEST_CASE("monitor streams decisions and exits 3 when tripped") {
  TempDir tmp;
  auto [spec, chain] = microwave_domain();
  write_file(tmp / "model.json", model_to_json_text(chain.generator, 0));
  write_file(tmp / "spec.json", spec_to_json_text(spec));
  Labeling lab;
  lab.add_expr("unsafe", "fork_inside & toggled");
  lab.save(tmp / "labels.json");

  std::string input = obs_line(0, false, false) + "\n" + obs_line(1, false, false) + "\n" +
                      obs_line(2, true, false) + "\n" + obs_line(3, false, false) + "\n";
  write_file(tmp / "obs.jsonl", input);

  std::string base = cli() + " monitor --model " + shell_quote(tmp / "model.json") +
                     " --spec " + shell_quote(tmp / "spec.json") + " --labels " +
                     shell_quote(tmp / "labels.json") + " --prop 'P<0.1 [ F unsafe ]'";
  ProcResult r = run_process(base + " --strategy stop < " + shell_quote(tmp / "obs.jsonl"));
  CHECK(r.exit_code == 3);

  std::vector<Json> lines;
  std::stringstream ss(r.out);
  for (std::string line; std::getline(ss, line);) lines.push_back(Json::parse(line));
  REQUIRE(lines.size() == 4);

  MonitorConfig cfg{spec, chain.generator, parse_formula("P<0.1 [ F unsafe ]"), lab,
                    Strategy{}};
  ReachabilityCache cache = build_cache(cfg);

  CHECK(lines[0]["decision"] == "continue");
  CHECK(lines[0]["state_id"] == 0);
  CHECK(lines[0]["probability"].get<double>() == cache.values[0]);
  CHECK(lines[0]["theta"] == 0.1);
  CHECK(lines[0]["strategy"] == "stop");
  CHECK(lines[1]["decision"] == "continue");
  CHECK(lines[2]["decision"] == "enforce");
  CHECK(lines[2]["state_id"] == 1);
  CHECK(lines[2]["probability"].get<double>() == cache.values[1]);
  // tripped: the original enforce is repeated for the safe observation
  CHECK(lines[3]["decision"] == "enforce");
  CHECK(lines[3]["state_id"] == 1);
  CHECK(lines[3]["probability"].get<double>() == cache.values[1]);

  // a clean run ends with exit 0
  write_file(tmp / "safe.jsonl", obs_line(0, false, false) + "\n");
  ProcResult clean =
      run_process(base + " --strategy reflect < " + shell_quote(tmp / "safe.jsonl"));
  CHECK(clean.exit_code == 0);
  CHECK(Json::parse(clean.out)["strategy"] == "reflect");

  // invoke strategies carry their action name
  ProcResult invoke = run_process(base + " --strategy invoke:reduce_speed --params" +
                                  " '{\"target_kmh\": 5}' < " + shell_quote(tmp / "obs.jsonl"));
  CHECK(invoke.exit_code == 3);
  CHECK(invoke.out.find("invoke_action") != std::string::npos);

  // malformed stream lines fail loudly
  write_file(tmp / "junk.jsonl", "{nope\n");
  ProcResult junk = run_process(base + " --strategy stop < " + shell_quote(tmp / "junk.jsonl") +
                                " 2>&1 > /dev/null");
  CHECK(junk.exit_code == 1);
  CHECK(error_json(junk.out)["code"] == "bad_trace");
}

TEST_CASE("export-dot renders the model graph") {
  TempDir tmp;
  auto [spec, chain] = microwave_domain();
  write_file(tmp / "model.json", model_to_json_text(chain.generator, 0));

  ProcResult to_stdout =
      run_process(cli() + " export-dot --model " + shell_quote(tmp / "model.json"));
  CHECK(to_stdout.exit_code == 0);
  CHECK(to_stdout.out.find("digraph") != std::string::npos);
  CHECK(to_stdout.out.find("0.5000") != std::string::npos);

  ProcResult to_file = run_process(cli() + " export-dot --model " +
                                   shell_quote(tmp / "model.json") + " --out " +
                                   shell_quote(tmp / "g.dot"));
  CHECK(to_file.exit_code == 0);
  CHECK(read_file(tmp / "g.dot") == to_stdout.out);
}

TEST_CASE("library error codes surface as json on stderr") {
  TempDir tmp;
  auto [spec, chain] = microwave_domain();
  write_file(tmp / "spec.json", spec_to_json_text(spec));
  write_file(tmp / "model.json", model_to_json_text(chain.generator, 0));

  ProcResult missing = run_process(cli() + " learn --spec " + shell_quote(tmp / "spec.json") +
                                   " --abs /nonexistent.jsonl --out " +
                                   shell_quote(tmp / "m.json") + " 2>&1");
  CHECK(missing.exit_code == 1);
  CHECK(error_json(missing.out)["code"] == "io_error");

  ProcResult badprop = run_process(cli() + " check --model " + shell_quote(tmp / "model.json") +
                                   " --prop 'P<=0.05 [ ]' 2>&1");
  CHECK(badprop.exit_code == 1);
  CHECK(error_json(badprop.out)["code"] == "syntax_error");

  ProcResult baddomain = run_process(cli() + " simulate --domain volcano --n 1 --out " +
                                     shell_quote(tmp / "t.jsonl") + " 2>&1");
  CHECK(baddomain.exit_code == 1);
  CHECK(error_json(baddomain.out)["code"] == "config_error");

  write_file(tmp / "abs.jsonl", R"({"id":"t","states":[0,1]})" "\n");
  ProcResult badeps = run_process(cli() + " pac --spec " + shell_quote(tmp / "spec.json") +
                                  " --abs " + shell_quote(tmp / "abs.jsonl") +
                                  " --epsilon 0 --delta 0.01 2>&1");
  CHECK(badeps.exit_code == 1);
  CHECK(error_json(badeps.out)["code"] == "invalid_epsilon_delta");
}
