#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "reachmon/dtmc.hpp"

using namespace reachmon;
using namespace testutil;

namespace {

// Three states a=0 ⟨00⟩, b=1 ⟨10⟩, c=2 ⟨01⟩; ⟨11⟩ excluded; a cannot
// self-loop, so a's valid successors are exactly {b, c}.
AbstractionSpec triangle_spec() {
  return spec_from_json_text(R"json({
    "variables": {"x": "bool", "y": "bool"},
    "predicates": [{"name": "x", "expr": "x"}, {"name": "y", "expr": "y"}],
    "state_rules": ["!(p0 & p1)"],
    "transition_rules": ["!(!p0 & !p1 & !p0' & !p1')"]
  })json");
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

TEST_CASE("transition counting tallies adjacent pairs") {
  AbstractionSpec spec = triangle_spec();
  CountMatrix c = count_transitions_ids({{0, 1}, {0, 1}, {0, 2}}, spec);
  CHECK(c.K == 3);
  CHECK(c.at(0, 1) == 2);
  CHECK(c.at(0, 2) == 1);
  CHECK(c.at(1, 0) == 0);
  CHECK(c.row_sum(0) == 3);
  CHECK(c.skipped_invalid == 0);
}

TEST_CASE("single-state traces produce no counts") {
  CountMatrix c = count_transitions_ids({{0}}, triangle_spec());
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(c.at(i, j) == 0);
  }
}

TEST_CASE("invalid observed transitions are skipped and tallied") {
  AbstractionSpec spec = triangle_spec();
  // a -> a is forbidden by the transition rule
  CountMatrix c = count_transitions_ids({{0, 0, 1}}, spec);
  CHECK(c.at(0, 0) == 0);
  CHECK(c.at(0, 1) == 1);
  CHECK(c.skipped_invalid == 1);
}

TEST_CASE("unknown trace states are rejected") {
  CHECK(code_of([] { count_transitions_ids({{0, 3}}, triangle_spec()); }) == "unknown_state");
  CHECK(code_of([] { count_transitions_ids({{9}}, triangle_spec()); }) == "unknown_state");
}

TEST_CASE("smoothing adds alpha to valid cells only") {
  AbstractionSpec spec = triangle_spec();
  CountMatrix c = count_transitions_ids({{0, 1}, {0, 1}, {0, 1}, {0, 2}}, spec);
  REQUIRE(c.at(0, 1) == 3);
  REQUIRE(c.at(0, 2) == 1);
  Dtmc m = learn_dtmc(c, spec, 1.0);
  CHECK(m.p(0, 0) == 0.0);  // invalid: no smoothing mass
  CHECK(m.p(0, 1) == 4.0 / 6.0);
  CHECK(m.p(0, 2) == 2.0 / 6.0);
  CHECK(m.alpha() == 1.0);
}

TEST_CASE("alpha zero reproduces empirical frequencies exactly") {
  AbstractionSpec spec = triangle_spec();
  CountMatrix c = count_transitions_ids({{0, 1, 0, 1, 0, 2}}, spec);
  Dtmc m = learn_dtmc(c, spec, 0.0);
  CHECK(m.p(0, 1) == 2.0 / 3.0);
  CHECK(m.p(0, 2) == 1.0 / 3.0);
  CHECK(m.p(1, 0) == 1.0);  // single observed successor
}

TEST_CASE("zero-count rows smooth to uniform over valid successors") {
  AbstractionSpec spec = spec_from_json_text(R"json({
    "variables": {"x": "bool"},
    "predicates": [{"name": "x", "expr": "x"}]
  })json");
  CountMatrix c = count_transitions_ids({}, spec);
  Dtmc m = learn_dtmc(c, spec, 1.0);
  CHECK(m.p(0, 0) == 0.5);
  CHECK(m.p(0, 1) == 0.5);
  CHECK(m.sinks()[0] == 0);
}

TEST_CASE("rows with no mass become flagged absorbing sinks") {
  AbstractionSpec spec = triangle_spec();
  CountMatrix c = count_transitions_ids({{1, 2}}, spec);
  Dtmc m = learn_dtmc(c, spec, 0.0);  // rows 0 and 2 have no counts
  CHECK(m.p(0, 0) == 1.0);
  CHECK(m.p(2, 2) == 1.0);
  CHECK(m.p(1, 2) == 1.0);
  CHECK(m.sinks()[0] == 1);
  CHECK(m.sinks()[1] == 0);
  CHECK(m.sinks()[2] == 1);
  // note: the sink self-loop is a repair, exempt from transition rules
}

TEST_CASE("negative alpha is rejected") {
  CHECK(code_of([] {
          count_transitions_ids({}, triangle_spec());
          learn_dtmc(CountMatrix(3), triangle_spec(), -0.5);
        }) == "negative_alpha");
}

TEST_CASE("terminal rows are absorbing after learning") {
  auto [spec, chain] = cliffwalk_domain();
  std::vector<std::vector<StateId>> walks = {{0, 1, 2}, {0, 0, 3}, {0, 1, 1, 3}};
  Dtmc m = learn_dtmc(count_transitions_ids(walks, spec), spec, 1.0);
  CHECK(m.p(2, 2) == 1.0);
  CHECK(m.p(3, 3) == 1.0);
  CHECK(m.p(2, 0) == 0.0);
  CHECK(m.p(3, 0) == 0.0);
}

TEST_CASE("learned matrices are row-stochastic with zero invalid mass") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomChain rc = random_chain(seed);
    auto traces = sample(rc.chain, 200, 200, seed * 31);
    auto abs = abstract_traces(traces, rc.spec);
    CountMatrix c = count_transitions(abs, rc.spec);
    for (double alpha : {0.0, 1.0}) {
      Dtmc m = learn_dtmc(c, rc.spec, alpha);
      const StateSpace& space = m.space();
      for (std::size_t i = 0; i < m.size(); ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) {
          z += m.p(i, j);
          if (!is_valid_transition(space.at(i), space.at(j), rc.spec)) {
            if (!(m.sinks()[i] && i == j)) CHECK(m.p(i, j) == 0.0);
          } else if (alpha > 0.0 && !m.sinks()[i]) {
            CHECK(m.p(i, j) > 0.0);  // smoothing floor
          }
        }
        CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
      }
      if (rc.has_forbidden) {
        CHECK(m.p(rc.forbidden_from, rc.forbidden_to) == 0.0);
      }
    }
  }
}

TEST_CASE("pac worked example lands on the expected requirement") {
  double required = pac_required_samples(10, 0.05, 0.01, 0.2);
  CHECK(required >= 1086.0);
  CHECK(required <= 1089.0);
  // independent evaluation of the same closed form
  double bracket = 0.25 - std::pow(std::abs(0.5 - 0.2) - (2.0 / 3.0) * 0.05, 2);
  double expect = (2.0 / (0.05 * 0.05)) * std::log(2.0 / (0.01 / 10.0)) * bracket;
  CHECK(required == doctest::Approx(expect).epsilon(1e-12));

  CountMatrix c(10);
  for (std::size_t q = 1; q <= 5; ++q) c.at(5, q) = 80;  // n_p=400, max_ratio=0.2
  PacReport report = pac_requirement(c, 0.05, 0.01);
  CHECK(report.m == 10);
  CHECK(report.delta_prime == 0.01 / 10.0);
  CHECK(report.per_state[5].n_p == 400);
  CHECK(report.per_state[5].max_ratio == 0.2);
  CHECK(report.per_state[5].required >= 1086.0);
  CHECK(report.per_state[5].required <= 1089.0);
  CHECK_FALSE(report.per_state[5].sufficient);
  CHECK_FALSE(report.all_sufficient);
}

TEST_CASE("pac bracket edge cases") {
  // bracket peaks at 1/4 when |1/2 - ratio| equals (2/3) epsilon
  double eps = 0.05;
  double peak_ratio = 0.5 - (2.0 / 3.0) * eps;
  double required = pac_required_samples(10, eps, 0.01, peak_ratio);
  double full = (2.0 / (eps * eps)) * std::log(2.0 / 0.001) * 0.25;
  CHECK(required == doctest::Approx(full).epsilon(1e-12));

  // deterministic rows (ratio 1) still require a positive sample count
  double det = pac_required_samples(10, eps, 0.01, 1.0);
  double bracket = 0.25 - std::pow(0.5 - (2.0 / 3.0) * eps, 2);
  CHECK(bracket == doctest::Approx(0.03222).epsilon(1e-3));
  CHECK(det == doctest::Approx((2.0 / (eps * eps)) * std::log(2000.0) * bracket).epsilon(1e-12));

  // the bracket never goes negative
  CHECK(pac_required_samples(4, 0.9, 0.5, 0.5) >= 0.0);
}

TEST_CASE("pac requirement is monotone in epsilon and delta") {
  for (double ratio : {0.0, 0.2, 0.5, 0.9}) {
    double prev = 0.0;
    for (double eps : {0.5, 0.2, 0.1, 0.05, 0.02}) {
      double r = pac_required_samples(8, eps, 0.01, ratio);
      CHECK(r >= prev);
      prev = r;
    }
    prev = 0.0;
    for (double delta : {0.5, 0.1, 0.01, 0.001}) {
      double r = pac_required_samples(8, 0.05, delta, ratio);
      CHECK(r >= prev);
      prev = r;
    }
  }
}

TEST_CASE("unvisited states are insufficient; terminals are exempt") {
  CountMatrix c(3);
  c.terminal = {0, 0, 1};
  c.at(0, 1) = 5000;
  c.at(1, 0) = 2500;
  c.at(1, 2) = 2500;
  PacReport r = pac_requirement(c, 0.05, 0.01);
  CHECK(r.per_state[0].max_ratio == 1.0);
  CHECK(r.per_state[1].max_ratio == 0.5);
  CHECK(r.per_state[1].sufficient);
  CHECK(r.per_state[2].terminal);
  CHECK(r.per_state[2].required == 0.0);
  CHECK(r.per_state[2].sufficient);  // absorption is fixed, not estimated

  CountMatrix empty(2);
  PacReport re = pac_requirement(empty, 0.05, 0.01);
  CHECK_FALSE(re.per_state[0].sufficient);
  CHECK(re.per_state[0].max_ratio == 0.0);
  CHECK(re.per_state[0].required > 0.0);
  CHECK_FALSE(re.all_sufficient);
}

TEST_CASE("epsilon and delta are validated") {
  CHECK(code_of([] { pac_required_samples(3, 0.0, 0.01, 0.5); }) == "invalid_epsilon_delta");
  CHECK(code_of([] { pac_required_samples(3, 1.0, 0.01, 0.5); }) == "invalid_epsilon_delta");
  CHECK(code_of([] { pac_required_samples(3, 0.05, 0.0, 0.5); }) == "invalid_epsilon_delta");
  CHECK(code_of([] { pac_required_samples(3, 0.05, 1.5, 0.5); }) == "invalid_epsilon_delta");
}

TEST_CASE("model distance is the max entry difference") {
  auto a = bare_chain(2, 0, {{0.5, 0.5}, {0.1, 0.9}});
  auto b = bare_chain(2, 0, {{0.5, 0.5}, {0.2, 0.8}});
  CHECK(model_distance(a, a) == 0.0);
  CHECK(model_distance(a, b) == doctest::Approx(0.1));
  auto c = bare_chain(3, 0, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  CHECK(code_of([&] { model_distance(a, c); }) == "shape_mismatch");
}

TEST_CASE("stochasticity is validated on construction") {
  CHECK(code_of([] { bare_chain(2, 0, {{0.5, 0.6}, {0.5, 0.5}}); }) == "bad_model");
  CHECK(code_of([] { bare_chain(2, 0, {{1.2, -0.2}, {0.5, 0.5}}); }) == "bad_model");
  CHECK(code_of([] { bare_chain(2, 0, {{1.0}, {0.5, 0.5}}); }) == "bad_model");
}

TEST_CASE("model json round-trips byte-identically") {
  AbstractionSpec spec = triangle_spec();
  CountMatrix c = count_transitions_ids({{0, 1, 2, 1, 0, 2}}, spec);
  Dtmc m = learn_dtmc(c, spec, 1.0);
  std::string text = model_to_json_text(m, 0);
  Dtmc again = model_from_json_text(text);
  CHECK(model_to_json_text(again, 0) == text);
  CHECK(model_hash(again) == model_hash(m));
  CHECK(again.alpha() == m.alpha());
  CHECK(again.space() == m.space());
  CHECK(again.counts().has_value());
  CHECK(again.counts()->at(0, 1) == c.at(0, 1));
  CHECK(model_initial_index(text) == std::optional<std::size_t>(0));
}

TEST_CASE("model hash distinguishes different matrices") {
  auto a = bare_chain(2, 0, {{0.5, 0.5}, {0.1, 0.9}});
  auto b = bare_chain(2, 0, {{0.5, 0.5}, {0.2, 0.8}});
  CHECK(model_hash(a) != model_hash(b));
  auto a2 = bare_chain(2, 0, {{0.5, 0.5}, {0.1, 0.9}});
  CHECK(model_hash(a) == model_hash(a2));
}

TEST_CASE("dot export lists states and positive edges") {
  auto m = bare_chain(2, 1, {{0.5, 0.25, 0.25}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
  std::string dot = export_dot(m);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("0.5000") != std::string::npos);
  CHECK(dot.find("0.2500") != std::string::npos);
  CHECK(dot.find("s0") != std::string::npos);
  CHECK(dot.find("t0") != std::string::npos);        // terminal label
  CHECK(dot.find("n1 -> n1") != std::string::npos);  // self-loop kept
  CHECK(dot.find("n1 -> n0") == std::string::npos);  // no zero-probability edges
  CHECK(dot.find("n1 -> n2") == std::string::npos);
}
