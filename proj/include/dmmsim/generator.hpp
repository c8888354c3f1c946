#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dmmsim/trace.hpp"

namespace dmmsim {

struct SizeWeight {
  Bytes size = 0;
  double weight = 0.0;
};

enum class LifetimeModel { LifoBurst, UniformRandom, Bimodal };

// Synthetic workload description. Lifetimes are measured in subsequent mallocs.
struct GeneratorSpec {
  std::uint64_t object_count = 0;
  std::vector<SizeWeight> sizes;
  LifetimeModel lifetime = LifetimeModel::UniformRandom;

  std::uint64_t max_burst = 16;       // LifoBurst
  std::uint64_t max_life_ops = 100;   // UniformRandom
  double short_fraction = 0.9;        // Bimodal
  std::uint64_t short_life_ops = 10;  // Bimodal, mean
  std::uint64_t long_life_ops = 1000; // Bimodal, mean
  // Bimodal only: when nonempty, long-lived objects draw from this
  // distribution and short-lived ones from `sizes`.
  std::vector<SizeWeight> long_sizes;

  double leak_fraction = 0.0;
  std::uint64_t seed = 1;
};

inline void validate(const GeneratorSpec& spec) {
  auto check_sizes = [](const std::vector<SizeWeight>& sizes, const char* what) {
    for (const auto& sw : sizes) {
      if (sw.size == 0) throw ConfigError(fmt::format("{}: size must be >= 1", what));
      if (!(sw.weight > 0.0)) throw ConfigError(fmt::format("{}: weights must be positive", what));
    }
  };
  if (spec.sizes.empty()) throw ConfigError("generator: empty size distribution");
  check_sizes(spec.sizes, "sizes");
  check_sizes(spec.long_sizes, "long_sizes");
  if (spec.leak_fraction < 0.0 || spec.leak_fraction > 1.0)
    throw ConfigError("generator: leak_fraction outside [0,1]");
  if (spec.short_fraction < 0.0 || spec.short_fraction > 1.0)
    throw ConfigError("generator: short_fraction outside [0,1]");
  if (spec.lifetime == LifetimeModel::LifoBurst && spec.max_burst == 0)
    throw ConfigError("generator: max_burst must be >= 1");
  if (spec.lifetime == LifetimeModel::UniformRandom && spec.max_life_ops == 0)
    throw ConfigError("generator: max_life_ops must be >= 1");
  if (spec.lifetime == LifetimeModel::Bimodal && (spec.short_life_ops == 0 || spec.long_life_ops == 0))
    throw ConfigError("generator: lifetimes must be >= 1");
}

namespace detail {

// Largest-remainder apportionment of `n` items over the weights, so size
// frequencies match the distribution as closely as integers allow.
inline std::vector<std::uint64_t> apportion(const std::vector<double>& weights, std::uint64_t n) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::uint64_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / total * static_cast<double>(n);
    counts[i] = static_cast<std::uint64_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

inline std::vector<Bytes> shuffled_sizes(const std::vector<SizeWeight>& dist, std::uint64_t n,
                                         std::mt19937_64& rng) {
  std::vector<double> weights;
  for (const auto& sw : dist) weights.push_back(sw.weight);
  const auto counts = apportion(weights, n);
  std::vector<Bytes> sizes;
  sizes.reserve(n);
  for (std::size_t i = 0; i < dist.size(); ++i) sizes.insert(sizes.end(), counts[i], dist[i].size);
  std::shuffle(sizes.begin(), sizes.end(), rng);
  return sizes;
}

inline std::uint64_t uniform(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

}  // namespace detail

// Deterministic for a fixed seed. Exactly `object_count` mallocs; exactly
// round(leak_fraction * object_count) objects are never freed.
inline Trace generate_trace(const GeneratorSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  const std::uint64_t n = spec.object_count;

  std::vector<bool> is_long(n, false);
  std::vector<Bytes> sizes;
  if (spec.lifetime == LifetimeModel::Bimodal) {
    const auto n_short = static_cast<std::uint64_t>(std::llround(spec.short_fraction * static_cast<double>(n)));
    std::fill(is_long.begin() + static_cast<std::ptrdiff_t>(n_short), is_long.end(), true);
    std::shuffle(is_long.begin(), is_long.end(), rng);
  }
  if (spec.lifetime == LifetimeModel::Bimodal && !spec.long_sizes.empty()) {
    const auto n_long = static_cast<std::uint64_t>(std::count(is_long.begin(), is_long.end(), true));
    auto short_sizes = detail::shuffled_sizes(spec.sizes, n - n_long, rng);
    auto long_sizes = detail::shuffled_sizes(spec.long_sizes, n_long, rng);
    sizes.resize(n);
    std::size_t si = 0, li = 0;
    for (std::uint64_t i = 0; i < n; ++i) sizes[i] = is_long[i] ? long_sizes[li++] : short_sizes[si++];
  } else {
    sizes = detail::shuffled_sizes(spec.sizes, n, rng);
  }

  std::vector<bool> leaked(n, false);
  {
    const auto n_leak = static_cast<std::uint64_t>(std::llround(spec.leak_fraction * static_cast<double>(n)));
    std::vector<std::uint64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::uint64_t k = 0; k < n_leak; ++k) leaked[order[k]] = true;
  }

  auto label = [](std::uint64_t i) { return fmt::format("0x{:x}", i + 1); };

  Trace trace;
  trace.reserve(2 * n);

  if (spec.lifetime == LifetimeModel::LifoBurst) {
    std::uint64_t i = 0;
    while (i < n) {
      const std::uint64_t burst = std::min<std::uint64_t>(detail::uniform(rng, 1, spec.max_burst), n - i);
      for (std::uint64_t k = 0; k < burst; ++k) trace.add_malloc(label(i + k), sizes[i + k]);
      for (std::uint64_t k = burst; k-- > 0;) {
        if (!leaked[i + k]) trace.add_free(label(i + k));
      }
      i += burst;
    }
    return trace;
  }

  using Due = std::pair<std::uint64_t, std::uint64_t>;  // (due step, object)
  std::priority_queue<Due, std::vector<Due>, std::greater<>> pending;
  auto life_of = [&](std::uint64_t i) -> std::uint64_t {
    if (spec.lifetime == LifetimeModel::UniformRandom) return detail::uniform(rng, 1, spec.max_life_ops);
    const std::uint64_t mean = is_long[i] ? spec.long_life_ops : spec.short_life_ops;
    return detail::uniform(rng, 1, 2 * mean - 1);
  };
  for (std::uint64_t i = 0; i < n; ++i) {
    trace.add_malloc(label(i), sizes[i]);
    const std::uint64_t life = life_of(i);
    if (!leaked[i]) pending.emplace(i + life, i);
    while (!pending.empty() && pending.top().first <= i) {
      trace.add_free(label(pending.top().second));
      pending.pop();
    }
  }
  while (!pending.empty()) {
    trace.add_free(label(pending.top().second));
    pending.pop();
  }
  return trace;
}

// JSON form:
// {"object_count": N, "seed": S, "leak_fraction": f,
//  "sizes": [[size, weight], ...],
//  "lifetime": {"model": "lifo-burst", "max_burst": B}
//            | {"model": "uniform", "max_life_ops": L}
//            | {"model": "bimodal", "short_fraction": p, "short_life_ops": a,
//               "long_life_ops": b, "long_sizes": [[size, weight], ...]}}
inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  auto read_sizes = [](const nlohmann::json& arr) {
    std::vector<SizeWeight> out;
    for (const auto& e : arr) out.push_back({e.at(0).get<Bytes>(), e.at(1).get<double>()});
    return out;
  };
  GeneratorSpec spec;
  try {
    spec.object_count = j.at("object_count").get<std::uint64_t>();
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.leak_fraction = j.value("leak_fraction", 0.0);
    spec.sizes = read_sizes(j.at("sizes"));
    const auto& life = j.at("lifetime");
    const auto model = life.at("model").get<std::string>();
    if (model == "lifo-burst") {
      spec.lifetime = LifetimeModel::LifoBurst;
      spec.max_burst = life.value("max_burst", spec.max_burst);
    } else if (model == "uniform") {
      spec.lifetime = LifetimeModel::UniformRandom;
      spec.max_life_ops = life.value("max_life_ops", spec.max_life_ops);
    } else if (model == "bimodal") {
      spec.lifetime = LifetimeModel::Bimodal;
      spec.short_fraction = life.value("short_fraction", spec.short_fraction);
      spec.short_life_ops = life.value("short_life_ops", spec.short_life_ops);
      spec.long_life_ops = life.value("long_life_ops", spec.long_life_ops);
      if (life.contains("long_sizes")) spec.long_sizes = read_sizes(life.at("long_sizes"));
    } else {
      throw ConfigError(fmt::format("generator: unknown lifetime model '{}'", model));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("generator spec: {}", e.what()));
  }
  validate(spec);
  return spec;
}

}  // namespace dmmsim
