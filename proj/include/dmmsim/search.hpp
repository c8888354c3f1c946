#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dmmsim/manager.hpp"
#include "dmmsim/metrics.hpp"
#include "dmmsim/simulator.hpp"
#include "dmmsim/trace.hpp"

namespace dmmsim {

using Codon = std::uint16_t;

struct Genome {
  std::vector<Codon> codons;

  friend bool operator==(const Genome&, const Genome&) = default;
};

inline constexpr std::size_t kMinGenomeLength = 16;

struct GEParams {
  std::size_t population_size = 60;
  std::size_t generations = 100;
  double crossover_rate = 0.8;
  double mutation_rate = 0.01;
  std::size_t tournament_size = 2;
  std::size_t elite_count = 1;
  unsigned max_wraps = 2;
  std::size_t genome_length = 64;
  double invalid_penalty = 1e12;
  std::uint64_t seed = 1;
};

inline void validate(const GEParams& p) {
  if (p.population_size < 2) throw ConfigError("population size must be >= 2");
  if (p.crossover_rate < 0 || p.crossover_rate > 1 || p.mutation_rate < 0 || p.mutation_rate > 1)
    throw ConfigError("rates must lie in [0,1]");
  if (p.elite_count < 1 || p.elite_count > p.population_size) throw ConfigError("elite count must be in [1, population]");
  if (p.tournament_size < 1) throw ConfigError("tournament size must be >= 1");
  if (p.genome_length < kMinGenomeLength) throw ConfigError(fmt::format("genome length must be >= {}", kMinGenomeLength));
}

/// Production rules of the DMM design space.
///
///   dmm        := count boundary{count-1} allocator{count}
///   count      := 1 | 2 | 3 | 4
///   boundary   := one value of the vocabulary (powers of two and observed
///                 sizes below the maximum); sorted and deduplicated
///   allocator  := kind [split coalesce] structure mechanism policy
///
/// SimpleSegregatedStorage takes no split/coalesce decision. Exact fit uses
/// the observed sizes in its range plus its upper bound as classes; strict
/// fit uses powers of two.
class Grammar {
 public:
  static constexpr std::array<AllocatorKind, 7> kKinds{
      AllocatorKind::SegregatedFreeList,  AllocatorKind::SimpleSegregatedStorage, AllocatorKind::SegregatedFit,
      AllocatorKind::ExactSegregatedFit,  AllocatorKind::StrictSegregatedFit,     AllocatorKind::BuddySystemBinary,
      AllocatorKind::BuddySystemFibonacci};

  Grammar(Bytes max_size, std::vector<Bytes> trace_sizes, Bytes word_bytes = 8)
      : max_size_(std::max<Bytes>(max_size, 1)), sizes_(std::move(trace_sizes)), word_bytes_(word_bytes) {
    std::sort(sizes_.begin(), sizes_.end());
    sizes_.erase(std::unique(sizes_.begin(), sizes_.end()), sizes_.end());
    for (Bytes p = 1; p < max_size_; p <<= 1) vocabulary_.push_back(p);
    for (Bytes s : sizes_) {
      if (s < max_size_) vocabulary_.push_back(s);
    }
    std::sort(vocabulary_.begin(), vocabulary_.end());
    vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
  }

  static Grammar for_trace(const TraceStats& stats, Bytes word_bytes = 8) {
    return Grammar(stats.max_size, {stats.distinct_sizes.begin(), stats.distinct_sizes.end()}, word_bytes);
  }

  Bytes max_size() const noexcept { return max_size_; }
  const std::vector<Bytes>& vocabulary() const noexcept { return vocabulary_; }

  // Codons are read left to right; a decision with k options takes codon % k.
  // Running past the end wraps to the start at most `max_wraps` times.
  std::optional<DMMSpec> map(const Genome& g, unsigned max_wraps) const {
    if (g.codons.empty()) return std::nullopt;
    std::size_t pos = 0;
    unsigned wraps = 0;
    bool invalid = false;
    auto pick = [&](std::size_t k) -> std::size_t {
      if (pos == g.codons.size()) {
        pos = 0;
        if (++wraps > max_wraps) invalid = true;
      }
      if (invalid) return 0;
      return g.codons[pos++] % k;
    };

    const std::size_t count = pick(4) + 1;
    std::vector<Bytes> bounds;
    if (!vocabulary_.empty()) {
      for (std::size_t i = 1; i < count; ++i) bounds.push_back(vocabulary_[pick(vocabulary_.size())]);
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    bounds.push_back(max_size_);

    DMMSpec spec;
    spec.word_bytes = word_bytes_;
    Bytes lo = 0;
    for (Bytes hi : bounds) {
      AllocatorSpec a;
      a.kind = kKinds[pick(kKinds.size())];
      a.range = {lo, hi};
      if (a.kind != AllocatorKind::SimpleSegregatedStorage) {
        a.split = pick(2) == 1;
        a.coalesce = pick(2) == 1;
      }
      a.data_structure = static_cast<DataStructure>(pick(3));
      a.mechanism = static_cast<Mechanism>(pick(4));
      a.policy = static_cast<Policy>(pick(2));
      if (a.kind == AllocatorKind::ExactSegregatedFit) {
        for (Bytes s : sizes_) {
          if (a.range.contains(s)) a.size_series.push_back(s);
        }
        if (a.size_series.empty() || a.size_series.back() != hi) a.size_series.push_back(hi);
      } else if (a.kind == AllocatorKind::StrictSegregatedFit) {
        a.size_series = binary_series(a.range);
      }
      spec.allocators.push_back(std::move(a));
      lo = hi;
    }
    if (invalid) return std::nullopt;
    return spec;
  }

 private:
  Bytes max_size_;
  std::vector<Bytes> sizes_;
  Bytes word_bytes_;
  std::vector<Bytes> vocabulary_;
};

// Fitness of one candidate; anything that cannot be composed or replayed
// scores the penalty.
inline double evaluate(const std::optional<DMMSpec>& spec, const Trace& trace, const Metrics& baseline,
                       const FitnessWeights& weights, const EnergyModel& model, double invalid_penalty) {
  if (!spec) return invalid_penalty;
  try {
    return simulate(trace, *spec, model, weights, baseline).fitness.value();
  } catch (const Error&) {
    return invalid_penalty;
  }
}

struct EvolveResult {
  std::optional<DMMSpec> best;
  Genome best_genome;
  double best_fitness = 0.0;
  std::vector<double> history;  // best so far, index 0 = initial population
  std::uint64_t evaluations = 0;
};

/// Generational search: tournament selection, single-point crossover on
/// codons, per-codon uniform mutation, and elitism. Deterministic per seed.
inline EvolveResult evolve(const Trace& trace, const GEParams& params, const Grammar& grammar,
                           const Metrics& baseline, const FitnessWeights& weights = {},
                           const EnergyModel& model = {}) {
  validate(params);
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<unsigned> codon_dist(0, 0xFFFF);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::map<std::string, double> cache;  // phenotype -> fitness
  EvolveResult result;

  auto score = [&](const Genome& g) {
    const auto spec = grammar.map(g, params.max_wraps);
    if (!spec) return params.invalid_penalty;
    const std::string key = emit_dmm_spec(*spec);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    ++result.evaluations;
    const double f = evaluate(spec, trace, baseline, weights, model, params.invalid_penalty);
    cache.emplace(key, f);
    return f;
  };

  auto random_genome = [&] {
    Genome g;
    g.codons.resize(params.genome_length);
    for (auto& c : g.codons) c = static_cast<Codon>(codon_dist(rng));
    return g;
  };

  std::vector<Genome> population;
  std::vector<double> fit;
  for (std::size_t i = 0; i < params.population_size; ++i) {
    population.push_back(random_genome());
    fit.push_back(score(population.back()));
  }

  auto record_best = [&] {
    const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
    if (result.history.empty() || fit[best] < result.best_fitness) {
      result.best_fitness = fit[best];
      result.best_genome = population[best];
    }
    result.history.push_back(result.best_fitness);
  };
  record_best();

  auto tournament = [&]() -> const Genome& {
    std::uniform_int_distribution<std::size_t> any(0, population.size() - 1);
    std::size_t winner = any(rng);
    for (std::size_t k = 1; k < params.tournament_size; ++k) {
      const std::size_t challenger = any(rng);
      if (fit[challenger] < fit[winner]) winner = challenger;
    }
    return population[winner];
  };

  auto mutate = [&](Genome& g) {
    for (auto& c : g.codons) {
      if (unit(rng) < params.mutation_rate) c = static_cast<Codon>(codon_dist(rng));
    }
  };

  for (std::size_t gen = 0; gen < params.generations; ++gen) {
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fit[a] < fit[b]; });

    std::vector<Genome> next;
    std::vector<double> next_fit;
    for (std::size_t e = 0; e < params.elite_count; ++e) {
      next.push_back(population[order[e]]);
      next_fit.push_back(fit[order[e]]);
    }
    std::vector<Genome> offspring;
    while (next.size() + offspring.size() < params.population_size) {
      Genome a = tournament();
      Genome b = tournament();
      if (unit(rng) < params.crossover_rate) {
        std::uniform_int_distribution<std::size_t> cut(1, params.genome_length - 1);
        const std::size_t point = cut(rng);
        std::swap_ranges(a.codons.begin() + static_cast<std::ptrdiff_t>(point), a.codons.end(),
                         b.codons.begin() + static_cast<std::ptrdiff_t>(point));
      }
      mutate(a);
      mutate(b);
      offspring.push_back(std::move(a));
      if (next.size() + offspring.size() < params.population_size) offspring.push_back(std::move(b));
    }
    for (auto& child : offspring) {
      next_fit.push_back(score(child));
      next.push_back(std::move(child));
    }
    population = std::move(next);
    fit = std::move(next_fit);
    record_best();
  }

  result.best = grammar.map(result.best_genome, params.max_wraps);
  return result;
}

inline std::string history_csv(const std::vector<double>& history) {
  std::string out = "generation,best_fitness\n";
  for (std::size_t i = 0; i < history.size(); ++i) out += fmt::format("{},{:.6f}\n", i, history[i]);
  return out;
}

}  // namespace dmmsim
