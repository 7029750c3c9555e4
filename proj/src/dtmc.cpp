#include "reachmon/dtmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "reachmon/json_util.hpp"

namespace reachmon {

std::uint64_t CountMatrix::row_sum(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < K; ++j) s += at(i, j);
  return s;
}

namespace {

std::vector<std::uint8_t> validity_matrix(const StateSpace& space, const AbstractionSpec& spec) {
  std::size_t K = space.size();
  std::vector<std::uint8_t> valid(K * K, 0);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      valid[i * K + j] = is_valid_transition(space.at(i), space.at(j), spec) ? 1 : 0;
    }
  }
  return valid;
}

void fill_terminal_mask(CountMatrix& c, const StateSpace& space) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    c.terminal[i] = space.at(i).is_terminal() ? 1 : 0;
    c.ids.push_back(space.at(i).id());
  }
}

}  // namespace

CountMatrix count_transitions(const std::vector<std::vector<SymbolicState>>& traces,
                              const AbstractionSpec& spec) {
  StateSpace space = enumerate_state_space(spec);
  CountMatrix c(space.size());
  fill_terminal_mask(c, space);
  std::vector<std::uint8_t> valid = validity_matrix(space, spec);

  for (const auto& trace : traces) {
    std::size_t prev = 0;
    bool have_prev = false;
    for (const auto& s : trace) {
      auto idx = space.index_of(s);
      if (!idx) {
        fail("unknown_state",
             "trace state with id " + std::to_string(s.id()) + " is outside the canonical space");
      }
      if (have_prev) {
        if (valid[prev * c.K + *idx]) {
          ++c.at(prev, *idx);
        } else {
          ++c.skipped_invalid;
        }
      }
      prev = *idx;
      have_prev = true;
    }
  }
  return c;
}

CountMatrix count_transitions_ids(const std::vector<std::vector<StateId>>& traces,
                                  const AbstractionSpec& spec) {
  StateSpace space = enumerate_state_space(spec);
  std::vector<std::vector<SymbolicState>> sym;
  sym.reserve(traces.size());
  for (const auto& t : traces) {
    std::vector<SymbolicState> row;
    row.reserve(t.size());
    for (StateId id : t) {
      auto idx = space.index_of_id(id);
      if (!idx) {
        fail("unknown_state",
             "trace state with id " + std::to_string(id) + " is outside the canonical space");
      }
      row.push_back(space.at(*idx));
    }
    sym.push_back(std::move(row));
  }
  return count_transitions(sym, spec);
}

Dtmc Dtmc::from_rows(StateSpace space, const std::vector<std::vector<double>>& rows,
                     std::string spec_hash_hex) {
  std::size_t K = space.size();
  if (rows.size() != K) fail("bad_model", "expected " + std::to_string(K) + " rows");
  Dtmc m;
  m.space_ = std::move(space);
  m.p_.assign(K * K, 0.0);
  m.sinks_.assign(K, 0);
  m.spec_hash_ = std::move(spec_hash_hex);
  for (std::size_t i = 0; i < K; ++i) {
    if (rows[i].size() != K) fail("bad_model", "row " + std::to_string(i) + " has wrong length");
    double sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      double v = rows[i][j];
      if (!(v >= 0.0) || v > 1.0) {
        fail("bad_model", "entry P[" + std::to_string(i) + "][" + std::to_string(j) +
                              "] out of range");
      }
      m.p_[i * K + j] = v;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      fail("bad_model", "row " + std::to_string(i) + " sums to " + format_double(sum));
    }
  }
  return m;
}

Dtmc learn_dtmc(const CountMatrix& counts, const AbstractionSpec& spec, double alpha) {
  if (alpha < 0.0) fail("negative_alpha", "alpha must be nonnegative");
  StateSpace space = enumerate_state_space(spec);
  std::size_t K = space.size();
  if (counts.K != K) {
    fail("shape_mismatch", "counts are " + std::to_string(counts.K) + "x" +
                               std::to_string(counts.K) + ", state space has " +
                               std::to_string(K) + " states");
  }
  std::vector<std::uint8_t> valid = validity_matrix(space, spec);

  Dtmc m;
  m.space_ = std::move(space);
  m.p_.assign(K * K, 0.0);
  m.sinks_.assign(K, 0);
  m.alpha_ = alpha;
  m.counts_ = counts;
  m.spec_hash_ = spec_hash(spec);

  for (std::size_t i = 0; i < K; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      if (valid[i * K + j]) z += static_cast<double>(counts.at(i, j)) + alpha;
    }
    if (z == 0.0) {
      // No observations and no smoothing mass anywhere valid: repair to an
      // absorbing self-loop so the row stays stochastic.
      m.p_[i * K + i] = 1.0;
      m.sinks_[i] = 1;
      continue;
    }
    for (std::size_t j = 0; j < K; ++j) {
      if (valid[i * K + j]) {
        m.p_[i * K + j] = (static_cast<double>(counts.at(i, j)) + alpha) / z;
      }
    }
  }
  return m;
}

double pac_required_samples(std::size_t m, double epsilon, double delta, double max_ratio) {
  if (m == 0) fail("invalid_epsilon_delta", "state space size must be positive");
  if (!(epsilon > 0.0) || !(epsilon < 1.0) || !(delta > 0.0) || !(delta < 1.0)) {
    fail("invalid_epsilon_delta", "need 0 < epsilon < 1 and 0 < delta < 1");
  }
  double delta_prime = delta / static_cast<double>(m);
  double inner = std::abs(0.5 - max_ratio) - (2.0 / 3.0) * epsilon;
  double bracket = 0.25 - inner * inner;
  if (bracket < 0.0) bracket = 0.0;
  return (2.0 / (epsilon * epsilon)) * std::log(2.0 / delta_prime) * bracket;
}

PacReport pac_requirement(const CountMatrix& counts, double epsilon, double delta) {
  PacReport rep;
  rep.epsilon = epsilon;
  rep.delta = delta;
  rep.m = counts.K;
  if (counts.K == 0) fail("invalid_epsilon_delta", "empty count matrix");
  rep.delta_prime = delta / static_cast<double>(counts.K);
  rep.all_sufficient = true;

  for (std::size_t i = 0; i < counts.K; ++i) {
    PacStateReport s;
    s.index = i;
    s.id = i < counts.ids.size() ? counts.ids[i] : static_cast<StateId>(i);
    s.n_p = counts.row_sum(i);
    s.terminal = i < counts.terminal.size() && counts.terminal[i] != 0;
    if (s.n_p > 0) {
      std::uint64_t mx = 0;
      for (std::size_t j = 0; j < counts.K; ++j) mx = std::max(mx, counts.at(i, j));
      s.max_ratio = static_cast<double>(mx) / static_cast<double>(s.n_p);
    }
    if (s.terminal) {
      // Terminal rows are forced by absorption, not estimated; nothing to
      // bound.
      s.required = 0.0;
      s.sufficient = true;
    } else {
      s.required = pac_required_samples(counts.K, epsilon, delta, s.max_ratio);
      s.sufficient = s.n_p > 0 && static_cast<double>(s.n_p) >= s.required;
    }
    rep.all_sufficient = rep.all_sufficient && s.sufficient;
    rep.per_state.push_back(s);
  }
  return rep;
}

double model_distance(const Dtmc& a, const Dtmc& b) {
  if (!(a.space() == b.space())) {
    fail("shape_mismatch", "models are over different state spaces");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.flat().size(); ++i) {
    d = std::max(d, std::abs(a.flat()[i] - b.flat()[i]));
  }
  return d;
}

std::string model_to_json_text(const Dtmc& m, std::optional<std::size_t> initial) {
  const StateSpace& sp = m.space();
  Json j = Json::object();
  j["format"] = 1;
  j["spec_hash"] = m.origin_spec_hash();
  j["k"] = sp.k;
  j["predicates"] = sp.predicate_names;
  j["terminals"] = sp.terminal_tags;
  Json states = Json::array();
  for (std::size_t i = 0; i < sp.size(); ++i) {
    states.push_back(Json{{"id", sp.at(i).id()}, {"label", sp.label(i)}});
  }
  j["states"] = states;
  j["alpha"] = m.alpha();
  Json rows = Json::array();
  for (std::size_t i = 0; i < sp.size(); ++i) {
    Json row = Json::array();
    for (std::size_t c = 0; c < sp.size(); ++c) row.push_back(m.p(i, c));
    rows.push_back(row);
  }
  j["P"] = rows;
  Json sinks = Json::array();
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (m.sinks()[i]) sinks.push_back(sp.at(i).id());
  }
  j["sinks"] = sinks;
  if (m.counts()) {
    Json crows = Json::array();
    for (std::size_t i = 0; i < m.counts()->K; ++i) {
      Json row = Json::array();
      for (std::size_t c = 0; c < m.counts()->K; ++c) row.push_back(m.counts()->at(i, c));
      crows.push_back(row);
    }
    j["counts"] = crows;
    j["skipped_invalid"] = m.counts()->skipped_invalid;
  }
  if (initial) j["initial"] = sp.at(*initial).id();
  return j.dump(2) + "\n";
}

Dtmc model_from_json_text(const std::string& text) {
  Json j = parse_json(text, "model");
  if (!j.is_object()) fail("bad_model", "model file: expected object");
  for (const char* field : {"k", "predicates", "terminals", "states", "P"}) {
    if (!j.contains(field)) fail("bad_model", std::string("model file: missing ") + field);
  }

  StateSpace sp;
  sp.k = j.at("k").get<std::size_t>();
  for (const auto& p : j.at("predicates")) sp.predicate_names.push_back(p.get<std::string>());
  for (const auto& t : j.at("terminals")) sp.terminal_tags.push_back(t.get<std::string>());
  if (sp.predicate_names.size() != sp.k) fail("bad_model", "k does not match predicate list");

  StateId terminal_base = StateId{1} << sp.k;
  for (const auto& s : j.at("states")) {
    StateId id = s.at("id").get<StateId>();
    if (id >= terminal_base) {
      std::size_t t = static_cast<std::size_t>(id - terminal_base);
      if (t >= sp.terminal_tags.size()) fail("bad_model", "state id beyond terminal range");
      sp.states.push_back(SymbolicState::terminal(t, sp.k));
    } else {
      sp.states.push_back(SymbolicState::from_bits(static_cast<std::uint32_t>(id), sp.k));
    }
  }
  for (std::size_t i = 0; i < sp.states.size(); ++i) sp.index_by_id[sp.states[i].id()] = i;

  std::vector<std::vector<double>> rows;
  for (const auto& r : j.at("P")) rows.push_back(r.get<std::vector<double>>());
  Dtmc m = Dtmc::from_rows(sp, rows, j.value("spec_hash", std::string()));
  m.alpha_ = j.value("alpha", 0.0);

  if (j.contains("sinks")) {
    for (const auto& sid : j.at("sinks")) {
      auto idx = m.space_.index_of_id(sid.get<StateId>());
      if (!idx) fail("bad_model", "sink id not in state list");
      m.sinks_[*idx] = 1;
    }
  }
  if (j.contains("counts")) {
    CountMatrix c(m.space_.size());
    fill_terminal_mask(c, m.space_);
    const Json& crows = j.at("counts");
    if (crows.size() != c.K) fail("bad_model", "counts shape mismatch");
    for (std::size_t i = 0; i < c.K; ++i) {
      if (crows[i].size() != c.K) fail("bad_model", "counts shape mismatch");
      for (std::size_t col = 0; col < c.K; ++col) {
        c.at(i, col) = crows[i][col].get<std::uint64_t>();
      }
    }
    c.skipped_invalid = j.value("skipped_invalid", std::uint64_t{0});
    m.counts_ = std::move(c);
  }
  return m;
}

std::optional<std::size_t> model_initial_index(const std::string& json_text) {
  Json j = parse_json(json_text, "model");
  if (!j.contains("initial")) return std::nullopt;
  StateId id = j.at("initial").get<StateId>();
  Dtmc m = model_from_json_text(json_text);
  auto idx = m.space().index_of_id(id);
  if (!idx) fail("bad_model", "initial state id not in state list");
  return idx;
}

void save_model(const Dtmc& m, const std::string& path, std::optional<std::size_t> initial) {
  write_file(path, model_to_json_text(m, initial));
}

Dtmc load_model(const std::string& path) { return model_from_json_text(read_file(path)); }

std::string model_hash(const Dtmc& m) {
  // Canonical content string: structure plus exact matrix entries.
  std::string s;
  s += std::to_string(m.space().k);
  for (const auto& n : m.space().predicate_names) s += "|" + n;
  for (const auto& t : m.space().terminal_tags) s += "|" + t;
  for (const auto& st : m.space().states) s += "|" + std::to_string(st.id());
  s += "|" + format_double(m.alpha());
  for (double v : m.flat()) s += "," + format_double(v);
  std::uint64_t h = fnv1a(s);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string export_dot(const Dtmc& m) {
  const StateSpace& sp = m.space();
  std::string out = "digraph dtmc {\n  rankdir=LR;\n  node [shape=box];\n";
  for (std::size_t i = 0; i < sp.size(); ++i) {
    std::string label = "s" + std::to_string(sp.at(i).id()) + "\\n";
    for (char c : sp.label(i)) {
      if (c == '"' || c == '\\') label.push_back('\\');
      label.push_back(c);
    }
    out += "  n" + std::to_string(sp.at(i).id()) + " [label=\"" + label + "\"];\n";
  }
  char prob[32];
  for (std::size_t i = 0; i < sp.size(); ++i) {
    for (std::size_t c = 0; c < sp.size(); ++c) {
      if (m.p(i, c) > 0.0) {
        std::snprintf(prob, sizeof(prob), "%.4f", m.p(i, c));
        out += "  n" + std::to_string(sp.at(i).id()) + " -> n" +
               std::to_string(sp.at(c).id()) + " [label=\"" + prob + "\"];\n";
      }
    }
  }
  out += "}\n";
  return out;
}

}  // namespace reachmon
