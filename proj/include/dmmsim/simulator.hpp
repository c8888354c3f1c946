#pragma once

#include <functional>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmmsim/manager.hpp"
#include "dmmsim/metrics.hpp"
#include "dmmsim/trace.hpp"

namespace dmmsim {

struct SimulationResult {
  Metrics metrics;
  Snapshot snapshot;
  double energy = 0.0;
  std::optional<double> fitness;  // against the supplied baseline
};

// Called after every replayed event; `malloc` is set for malloc events.
using EventHook = std::function<void(EventIndex, const TraceEvent&, const DMM&, const MallocOutcome* malloc)>;

// Replays the trace in order; the event index is the simulation clock.
// Throws SimulationError naming the event when a request cannot be served.
inline SimulationResult simulate(const Trace& trace, const DMMSpec& spec, const EnergyModel& model = {},
                                 const FitnessWeights& weights = {}, const std::optional<Metrics>& baseline = {},
                                 const EventHook& hook = {}) {
  DMM dmm(spec, trace.label_count());
  const auto& events = trace.events();
  for (EventIndex i = 0; i < events.size(); ++i) {
    const TraceEvent& e = events[i];
    if (e.kind == EventKind::Malloc) {
      MallocOutcome out = dmm.malloc(e.object, e.size, i);
      if (hook) hook(i, e, dmm, &out);
    } else {
      dmm.free(e.object, i);
      if (hook) hook(i, e, dmm, nullptr);
    }
  }
  SimulationResult result;
  result.metrics = dmm.metrics();
  result.snapshot = dmm.snapshot();
  result.energy = energy(result.metrics, model);
  if (baseline) result.fitness = fitness(result.metrics, *baseline, weights, model);
  return result;
}

inline nlohmann::ordered_json to_json(const SimulationResult& r) {
  nlohmann::ordered_json j;
  j["metrics"] = to_json(r.metrics);
  j["energy"] = r.energy;
  if (r.fitness) j["fitness_vs_baseline"] = *r.fitness;
  j["snapshot"] = to_json(r.snapshot);
  return j;
}

using NamedSpec = std::pair<std::string, DMMSpec>;

// Simulates every candidate once and normalizes against the named baseline.
// A candidate whose replay aborts is reported with its error; the run goes on.
inline Report compare(const Trace& trace, const std::vector<NamedSpec>& specs, const std::string& baseline_name,
                      const EnergyModel& model = {}, const FitnessWeights& weights = {}, bool parallel = false) {
  auto run = [&](const DMMSpec& spec) -> std::pair<std::optional<Metrics>, std::string> {
    try {
      return {simulate(trace, spec, model).metrics, {}};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  };

  std::vector<std::pair<std::optional<Metrics>, std::string>> results(specs.size());
  if (parallel) {
    std::vector<std::future<std::pair<std::optional<Metrics>, std::string>>> futures;
    for (const auto& [name, spec] : specs) futures.push_back(std::async(std::launch::async, run, std::cref(spec)));
    for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < specs.size(); ++i) results[i] = run(specs[i].second);
  }

  std::optional<Metrics> baseline;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].first == baseline_name) {
      if (!results[i].first) throw Error(fmt::format("baseline '{}' failed: {}", baseline_name, results[i].second));
      baseline = results[i].first;
    }
  }
  if (!baseline) throw ConfigError(fmt::format("baseline '{}' is not among the candidates", baseline_name));

  std::vector<std::pair<std::string, std::optional<Metrics>>> candidates;
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    candidates.emplace_back(specs[i].first, results[i].first);
    errors.push_back(results[i].second);
  }
  return normalized_report(baseline_name, *baseline, candidates, model, weights, errors);
}

}  // namespace dmmsim
