#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reachmon/abstraction.hpp"
#include "reachmon/dtmc.hpp"

namespace reachmon {

inline constexpr std::size_t kDefaultMaxLen = 200;

struct TraceStep {
  std::string action;
  ConcreteState state;

  friend bool operator==(const TraceStep& a, const TraceStep& b) = default;
};

struct TraceMeta {
  std::string instruction;
  std::string env;
  std::uint64_t seed = 0;

  friend bool operator==(const TraceMeta& a, const TraceMeta& b) = default;
};

struct Trace {
  std::string id;
  TraceMeta meta;
  std::vector<TraceStep> steps;
  std::optional<std::string> outcome;  // "finished" | "truncated"

  std::vector<ConcreteState> states() const;

  friend bool operator==(const Trace& a, const Trace& b) = default;
};

// A known transition matrix plus, for every state index, a concrete-state
// template whose abstraction round-trips to that state. Used to generate
// ground-truth observation streams.
struct GroundTruthChain {
  Dtmc generator;
  std::size_t initial_index = 0;
  std::vector<ConcreteState> emissions;
  std::string instruction;
  std::string env;
};

// One trace per line: {"id", "meta": {"instruction", "env", "seed"},
// "steps": [{"action", "state": {...}}], "outcome"?}.
std::string traces_to_jsonl(const std::vector<Trace>& traces);
std::vector<Trace> traces_from_jsonl(const std::string& text);
std::vector<Trace> load_traces(const std::string& path);
void save_traces(const std::vector<Trace>& traces, const std::string& path);

// Deterministic per-trace RNG stream derived from (seed, trace index).
std::uint64_t trace_stream_seed(std::uint64_t seed, std::uint64_t index);

// IID sampling: each trace starts at the chain's initial state and steps by
// multinomial draws until it hits a terminal (outcome "finished") or reaches
// max_len states counting the initial one (outcome "truncated").
std::vector<Trace> sample(const GroundTruthChain& chain, std::size_t n_traces,
                          std::size_t max_len = kDefaultMaxLen, std::uint64_t seed = 0);

std::pair<AbstractionSpec, GroundTruthChain> microwave_domain();
std::pair<AbstractionSpec, GroundTruthChain> intersection_domain();
std::pair<AbstractionSpec, GroundTruthChain> cliffwalk_domain();
std::pair<AbstractionSpec, GroundTruthChain> domain_by_name(const std::string& name);

// For simulating from an arbitrary saved model: boolean variables b0..b{k-1}
// realize the predicate bits and each terminal tag is its own flag variable.
AbstractionSpec synthesize_bit_spec(const Dtmc& model);
GroundTruthChain chain_from_model(const Dtmc& model, std::size_t initial_index = 0);

std::vector<std::vector<SymbolicState>> abstract_traces(const std::vector<Trace>& traces,
                                                        const AbstractionSpec& spec);

}  // namespace reachmon
