#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "dmmsim/manager.hpp"
#include "dmmsim/trace.hpp"

namespace dmmsim::presets {

// Power-of-two classes, constant-time class lists, never splits or coalesces.
inline DMMSpec kingsley(Bytes max_size) {
  const Bytes top = next_pow2(std::max<Bytes>(max_size, 1));
  AllocatorSpec a;
  a.kind = AllocatorKind::StrictSegregatedFit;
  a.range = {0, top};
  a.data_structure = DataStructure::SLL;
  a.mechanism = Mechanism::EXACT;
  a.policy = Policy::LIFO;
  for (Bytes p = 1; p <= top; p <<= 1) a.size_series.push_back(p);
  return DMMSpec{{a}};
}

inline constexpr Bytes kLeaSmallMax = 63;       // below 64 bytes
inline constexpr Bytes kLeaMediumMax = 131071;  // below 128 KiB

// Three regimes: exact multiple-of-8 bins for small requests, best fit with
// immediate splitting and coalescing for medium ones, and direct arena
// mappings (never reused) for large ones.
inline DMMSpec lea(Bytes max_size) {
  max_size = std::max<Bytes>(max_size, 1);
  DMMSpec spec;

  AllocatorSpec small;
  small.kind = AllocatorKind::StrictSegregatedFit;
  small.range = {0, std::min(kLeaSmallMax, max_size)};
  small.data_structure = DataStructure::SLL;
  small.mechanism = Mechanism::EXACT;
  small.policy = Policy::FIFO;
  for (Bytes c = 8; c < small.range.hi + 8; c += 8) small.size_series.push_back(c);
  spec.allocators.push_back(small);

  if (max_size > kLeaSmallMax) {
    AllocatorSpec medium;
    medium.kind = AllocatorKind::SegregatedFit;
    medium.range = {kLeaSmallMax, std::min(kLeaMediumMax, max_size)};
    medium.split = true;
    medium.coalesce = true;
    medium.data_structure = DataStructure::DLL;
    medium.mechanism = Mechanism::BEST;
    medium.policy = Policy::FIFO;
    spec.allocators.push_back(medium);
  }
  if (max_size > kLeaMediumMax) {
    AllocatorSpec large;
    large.kind = AllocatorKind::VirtualMemory;
    large.range = {kLeaMediumMax, max_size};
    large.data_structure = DataStructure::SLL;
    large.mechanism = Mechanism::FIRST;
    large.policy = Policy::FIFO;
    spec.allocators.push_back(large);
  }
  return spec;
}

inline DMMSpec fibonacci_buddy(Bytes max_size) {
  AllocatorSpec a;
  a.kind = AllocatorKind::BuddySystemFibonacci;
  a.range = {0, fibonacci_series({0, std::max<Bytes>(max_size, 1)}).back()};
  a.split = true;
  a.coalesce = true;
  a.data_structure = DataStructure::SLL;
  a.mechanism = Mechanism::FIRST;
  a.policy = Policy::FIFO;
  return DMMSpec{{a}};
}

// Upper bounds of `count` geometric sub-ranges over (0, top]: ceil(r^i) with
// r = top^(1/count), nudged to stay strictly increasing.
inline std::vector<Bytes> geometric_boundaries(Bytes top, unsigned count) {
  std::vector<Bytes> bounds;
  Bytes prev = 0;
  for (unsigned i = 1; i < count; ++i) {
    const double v = std::pow(static_cast<double>(top), static_cast<double>(i) / count);
    Bytes b = static_cast<Bytes>(std::ceil(v - 1e-9));
    b = std::max(b, prev + 1);
    b = std::min(b, top - (count - i));
    bounds.push_back(b);
    prev = b;
  }
  bounds.push_back(top);
  return bounds;
}

inline DMMSpec segregated10(Bytes max_size) {
  const Bytes top = std::max<Bytes>(max_size, 10);
  AllocatorSpec a;
  a.kind = AllocatorKind::SegregatedFit;
  a.range = {0, top};
  a.data_structure = DataStructure::SLL;
  a.mechanism = Mechanism::FIRST;
  a.policy = Policy::FIFO;
  a.boundaries = geometric_boundaries(top, 10);
  return DMMSpec{{a}};
}

inline DMMSpec exact_segregated(const std::vector<Bytes>& sizes) {
  if (sizes.empty()) throw ConfigError("exact segregated preset needs at least one size");
  AllocatorSpec a;
  a.kind = AllocatorKind::ExactSegregatedFit;
  a.size_series = sizes;
  std::sort(a.size_series.begin(), a.size_series.end());
  a.size_series.erase(std::unique(a.size_series.begin(), a.size_series.end()), a.size_series.end());
  a.range = {0, a.size_series.back()};
  a.data_structure = DataStructure::SLL;
  a.mechanism = Mechanism::EXACT;
  a.policy = Policy::LIFO;
  return DMMSpec{{a}};
}

inline DMMSpec exact_segregated(const TraceStats& stats) {
  return exact_segregated(std::vector<Bytes>(stats.distinct_sizes.begin(), stats.distinct_sizes.end()));
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> kNames{"kng", "lea", "fib", "s10", "exa"};
  return kNames;
}

inline bool is_preset(std::string_view name) {
  return std::find(names().begin(), names().end(), name) != names().end();
}

inline DMMSpec by_name(std::string_view name, const TraceStats& stats) {
  const Bytes max_size = std::max<Bytes>(stats.max_size, 1);
  if (name == "kng") return kingsley(max_size);
  if (name == "lea") return lea(max_size);
  if (name == "fib") return fibonacci_buddy(max_size);
  if (name == "s10") return segregated10(max_size);
  if (name == "exa") return exact_segregated(stats.distinct_sizes.empty() ? TraceStats{.distinct_sizes = {1}} : stats);
  throw ConfigError(fmt::format("unknown preset '{}'", name));
}

}  // namespace dmmsim::presets
