#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reachmon/abstraction.hpp"

namespace reachmon {

// Transition counts over a canonical state space. `terminal[i]` marks rows
// that are fixed by absorption rather than estimated from data.
struct CountMatrix {
  std::size_t K = 0;
  std::vector<std::uint64_t> n;
  std::vector<std::uint8_t> terminal;
  std::vector<StateId> ids;  // canonical ids when built from a spec
  std::uint64_t skipped_invalid = 0;

  explicit CountMatrix(std::size_t k = 0)
      : K(k), n(k * k, 0), terminal(k, 0) {}

  std::uint64_t& at(std::size_t i, std::size_t j) { return n[i * K + j]; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return n[i * K + j]; }
  std::uint64_t row_sum(std::size_t i) const;
};

CountMatrix count_transitions(const std::vector<std::vector<SymbolicState>>& traces,
                              const AbstractionSpec& spec);
CountMatrix count_transitions_ids(const std::vector<std::vector<StateId>>& traces,
                                  const AbstractionSpec& spec);

// Row-stochastic transition matrix over a canonical state space.
class Dtmc {
public:
  Dtmc() = default;

  // Validates stochasticity (row sums within 1e-9 of 1, entries in [0,1]).
  static Dtmc from_rows(StateSpace space, const std::vector<std::vector<double>>& rows,
                        std::string spec_hash_hex = "");

  const StateSpace& space() const { return space_; }
  std::size_t size() const { return space_.size(); }
  double p(std::size_t i, std::size_t j) const { return p_[i * space_.size() + j]; }
  const std::vector<double>& flat() const { return p_; }
  double alpha() const { return alpha_; }
  const std::vector<std::uint8_t>& sinks() const { return sinks_; }
  const std::optional<CountMatrix>& counts() const { return counts_; }
  const std::string& origin_spec_hash() const { return spec_hash_; }

private:
  friend Dtmc learn_dtmc(const CountMatrix&, const AbstractionSpec&, double);
  friend Dtmc model_from_json_text(const std::string&);

  StateSpace space_;
  std::vector<double> p_;
  double alpha_ = 0.0;
  std::vector<std::uint8_t> sinks_;
  std::optional<CountMatrix> counts_;
  std::string spec_hash_;
};

// Validity-aware Laplace smoothing: alpha is added to valid cells only, rows
// are normalized, and all-zero rows are repaired to absorbing self-loops and
// flagged as sinks.
Dtmc learn_dtmc(const CountMatrix& counts, const AbstractionSpec& spec, double alpha);

struct PacStateReport {
  std::size_t index = 0;
  StateId id = 0;
  std::uint64_t n_p = 0;
  double max_ratio = 0.0;
  double required = 0.0;
  bool sufficient = false;
  bool terminal = false;
};

struct PacReport {
  double epsilon = 0.0;
  double delta = 0.0;
  double delta_prime = 0.0;
  std::size_t m = 0;
  std::vector<PacStateReport> per_state;
  bool all_sufficient = false;
};

// Sample-size requirement for one state's row estimate.
double pac_required_samples(std::size_t m, double epsilon, double delta, double max_ratio);
PacReport pac_requirement(const CountMatrix& counts, double epsilon, double delta);

// L-infinity distance over transition matrix entries; the two models must
// share a state space.
double model_distance(const Dtmc& a, const Dtmc& b);

std::string model_to_json_text(const Dtmc& m, std::optional<std::size_t> initial = std::nullopt);
Dtmc model_from_json_text(const std::string& text);
void save_model(const Dtmc& m, const std::string& path,
                std::optional<std::size_t> initial = std::nullopt);
Dtmc load_model(const std::string& path);
std::optional<std::size_t> model_initial_index(const std::string& json_text);

std::string model_hash(const Dtmc& m);
std::string export_dot(const Dtmc& m);

}  // namespace reachmon
