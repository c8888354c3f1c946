#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dmmsim/allocator.hpp"
#include "dmmsim/metrics.hpp"
#include "dmmsim/trace.hpp"

namespace dmmsim {

// A composed manager: allocators whose ranges partition (0, max_size()].
struct DMMSpec {
  std::vector<AllocatorSpec> allocators;
  Bytes word_bytes = 8;

  Bytes max_size() const {
    Bytes hi = 0;
    for (const auto& a : allocators) hi = std::max(hi, a.range.hi);
    return hi;
  }

  friend bool operator==(const DMMSpec&, const DMMSpec&) = default;
};

// Throws ConfigError on overlap, gap, or an allocator that cannot be built.
inline void validate(const DMMSpec& spec) {
  if (spec.allocators.empty()) throw ConfigError("DMM has no allocators");
  std::vector<SizeRange> ranges;
  for (const auto& a : spec.allocators) ranges.push_back(a.range);
  std::sort(ranges.begin(), ranges.end(), [](auto& x, auto& y) { return x.lo < y.lo; });
  Bytes expected = 0;
  for (const auto& r : ranges) {
    if (!r.valid()) throw ConfigError(fmt::format("empty range ({}, {}]", r.lo, r.hi));
    if (r.lo < expected) throw ConfigError(fmt::format("overlap: range ({}, {}] starts below {}", r.lo, r.hi, expected));
    if (r.lo > expected) throw ConfigError(fmt::format("gap: sizes ({}, {}] are not covered", expected, r.lo));
    expected = r.hi;
  }
  for (const auto& a : spec.allocators) Allocator probe(a, spec.word_bytes);
}

// ---- configuration file --------------------------------------------------

inline nlohmann::ordered_json to_json(const AllocatorSpec& a) {
  nlohmann::ordered_json j;
  j["class"] = to_string(a.kind);
  j["split"] = a.split;
  j["coalesce"] = a.coalesce;
  j["data_structure"] = to_string(a.data_structure);
  j["mechanism"] = to_string(a.mechanism);
  j["policy"] = to_string(a.policy);
  j["range"] = {a.range.lo, a.range.hi};
  if (!a.size_series.empty()) j["size_series"] = a.size_series;
  if (!a.boundaries.empty()) j["boundaries"] = a.boundaries;
  return j;
}

inline nlohmann::ordered_json to_json(const DMMSpec& spec) {
  nlohmann::ordered_json j;
  j["word_bytes"] = spec.word_bytes;
  j["allocators"] = nlohmann::ordered_json::array();
  for (const auto& a : spec.allocators) j["allocators"].push_back(to_json(a));
  return j;
}

inline std::string emit_dmm_spec(const DMMSpec& spec) { return to_json(spec).dump(2) + "\n"; }

inline AllocatorSpec allocator_spec_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> kKeys{"class",  "split", "coalesce",    "data_structure", "mechanism",
                                              "policy", "range", "size_series", "boundaries"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw ConfigError(fmt::format("unknown allocator key '{}'", key));
  }
  AllocatorSpec a;
  a.kind = parse_allocator_kind(j.at("class").get<std::string>());
  a.split = j.at("split").get<bool>();
  a.coalesce = j.at("coalesce").get<bool>();
  a.data_structure = parse_data_structure(j.at("data_structure").get<std::string>());
  a.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
  a.policy = parse_policy(j.at("policy").get<std::string>());
  const auto& r = j.at("range");
  if (!r.is_array() || r.size() != 2) throw ConfigError("range must be [lo, hi]");
  a.range = {r.at(0).get<Bytes>(), r.at(1).get<Bytes>()};
  if (j.contains("size_series")) a.size_series = j.at("size_series").get<std::vector<Bytes>>();
  if (j.contains("boundaries")) a.boundaries = j.at("boundaries").get<std::vector<Bytes>>();
  return a;
}

inline DMMSpec dmm_spec_from_json(const nlohmann::json& j) {
  DMMSpec spec;
  try {
    for (const auto& [key, _] : j.items()) {
      if (key != "word_bytes" && key != "allocators") throw ConfigError(fmt::format("unknown DMM key '{}'", key));
    }
    spec.word_bytes = j.value("word_bytes", Bytes{8});
    for (const auto& a : j.at("allocators")) spec.allocators.push_back(allocator_spec_from_json(a));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("DMM config: {}", e.what()));
  }
  validate(spec);
  return spec;
}

inline DMMSpec parse_dmm_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("DMM config: {}", e.what()));
  }
  return dmm_spec_from_json(j);
}

// Human-readable map: one header line per allocator, one row per free list.
inline std::string dmm_table(const DMMSpec& spec) {
  std::string out;
  for (const auto& a : spec.allocators) {
    Allocator built(a, spec.word_bytes);
    out += fmt::format("{}, split={}, coalesce={}\n", to_string(a.kind), a.split, a.coalesce);
    out += fmt::format("  {:<14} {:<18} {}\n", "Data Structure", "Mechanism(Policy)", "Range (bytes)");
    for (const auto& l : built.lists()) {
      out += fmt::format("  {:<14} {:<18} ({}, {}]\n", to_string(l.config().data_structure),
                         fmt::format("{}({})", to_string(l.config().mechanism), to_string(l.config().policy)),
                         l.range().lo, l.range().hi);
    }
  }
  return out;
}

// ---- runtime -------------------------------------------------------------

struct ListSnapshot {
  SizeRange range;
  std::uint64_t free_blocks = 0;
  Bytes free_bytes = 0;
  std::uint64_t live_blocks = 0;
  Bytes live_bytes = 0;
};

struct AllocatorSnapshot {
  AllocatorKind kind{};
  SizeRange range;
  std::vector<ListSnapshot> lists;
  Bytes slack_bytes = 0;
};

struct Snapshot {
  Bytes arena_top = 0;
  std::vector<AllocatorSnapshot> allocators;
};

inline nlohmann::ordered_json to_json(const Snapshot& s) {
  nlohmann::ordered_json j;
  j["arena_top"] = s.arena_top;
  j["allocators"] = nlohmann::ordered_json::array();
  for (const auto& a : s.allocators) {
    nlohmann::ordered_json ja;
    ja["class"] = to_string(a.kind);
    ja["range"] = {a.range.lo, a.range.hi};
    ja["slack_bytes"] = a.slack_bytes;
    ja["lists"] = nlohmann::ordered_json::array();
    for (const auto& l : a.lists) {
      ja["lists"].push_back({{"range", {l.range.lo, l.range.hi}},
                             {"free_blocks", l.free_blocks},
                             {"free_bytes", l.free_bytes},
                             {"live_blocks", l.live_blocks},
                             {"live_bytes", l.live_bytes}});
    }
    j["allocators"].push_back(std::move(ja));
  }
  return j;
}

struct MallocOutcome {
  Block block;
  std::size_t allocator = 0;
  CostDelta cost;
  bool from_arena = false;
};

/// The composed manager. Routes each request to the allocator owning its
/// size, keeps the live pool (a stack per object id, newest first) and draws
/// fresh blocks from a monotone arena cursor when an allocator has nothing
/// to give.
class DMM {
 public:
  explicit DMM(DMMSpec spec, std::size_t object_hint = 0) : spec_(std::move(spec)) {
    validate(spec_);
    auto sorted = spec_.allocators;
    std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.range.lo < y.range.lo; });
    for (auto& a : sorted) {
      upper_.push_back(a.range.hi);
      uses_farthest_ = uses_farthest_ || a.mechanism == Mechanism::FARTHEST;
      allocators_.emplace_back(std::move(a), spec_.word_bytes);
    }
    live_.resize(object_hint);
  }

  const DMMSpec& spec() const noexcept { return spec_; }
  const std::vector<Allocator>& allocators() const noexcept { return allocators_; }
  Bytes arena_top() const noexcept { return arena_top_; }
  Bytes live_bytes() const noexcept { return live_bytes_; }
  std::uint64_t live_objects() const noexcept { return live_objects_; }

  Bytes free_bytes() const noexcept {
    Bytes total = 0;
    for (const auto& a : allocators_) total += a.free_bytes();
    return total;
  }

  Bytes slack_bytes() const noexcept {
    Bytes total = 0;
    for (const auto& a : allocators_) total += a.slack_bytes();
    return total;
  }

  // live + free-listed + slack == arena top
  bool conserved() const noexcept { return live_bytes_ + free_bytes() + slack_bytes() == arena_top_; }

  std::size_t route(Bytes request) const {
    auto it = std::lower_bound(upper_.begin(), upper_.end(), request);
    return static_cast<std::size_t>(it - upper_.begin());
  }

  MallocOutcome malloc(ObjectId id, Bytes request, EventIndex now) {
    if (request == 0 || request > upper_.back()) {
      throw SimulationError(now, fmt::format("request {} exceeds the DMM range (0, {}]", request, upper_.back()));
    }
    MallocOutcome out;
    out.allocator = route(request);
    Allocator& alloc = allocators_[out.allocator];
    out.cost += cost::kIndexLevel;
    out.cost += cost::kIndexLevel;

    MallocResult r;
    try {
      r = alloc.malloc(request, now, uses_farthest_ ? hottest() : std::nullopt);
    } catch (const SimulationError&) {
      throw;
    } catch (const Error& e) {
      throw SimulationError(now, e.what());
    }
    out.cost += r.cost;
    if (r.block) {
      out.block = *r.block;
    } else {
      const Bytes free_now = free_bytes();
      if (free_now >= request) {
        ++metrics_.external_frag_events;
        metrics_.external_frag_wasted_bytes += free_now;
      }
      out.block = alloc.carve(arena_top_, r.class_size, now);
      arena_top_ += out.block.size;
      out.from_arena = true;
      out.cost += cost::kArenaDraw;
    }

    if (id >= live_.size()) live_.resize(static_cast<std::size_t>(id) + 1);
    live_[id].push_back({out.block, request, static_cast<std::uint32_t>(out.allocator)});
    ++live_objects_;
    live_bytes_ += out.block.size;
    requested_ += request;
    frag_ += out.block.payload() - request;
    metrics_.internal_frag_bytes = std::max(metrics_.internal_frag_bytes, frag_);
    metrics_.peak_requested_bytes = std::max(metrics_.peak_requested_bytes, requested_);
    ++metrics_.malloc_count;
    charge(out.cost);
    if (uses_farthest_) touch(out.block.position, true);
    return out;
  }

  CostDelta free(ObjectId id, EventIndex now) {
    if (id >= live_.size() || live_[id].empty()) {
      ++metrics_.invalid_frees;
      return {};
    }
    const LiveEntry entry = live_[id].back();
    live_[id].pop_back();
    --live_objects_;
    live_bytes_ -= entry.block.size;
    requested_ -= entry.requested;
    frag_ -= entry.block.payload() - entry.requested;
    if (uses_farthest_) touch(entry.block.position, false);

    CostDelta c = cost::kIndexLevel + cost::kIndexLevel;
    c += allocators_[entry.allocator].free(entry.block, now);
    ++metrics_.free_count;
    charge(c);
    return c;
  }

  // Counters so far. Objects still live count as invalid mallocs.
  Metrics metrics() const {
    Metrics m = metrics_;
    for (const auto& a : allocators_) {
      m.split_count += a.split_count();
      m.coalesce_count += a.coalesce_count();
      m.farthest_fallbacks += a.fallback_count();
    }
    m.invalid_mallocs = live_objects_;
    m.hwm_bytes = arena_top_;
    return m;
  }

  Snapshot snapshot() const {
    Snapshot s;
    s.arena_top = arena_top_;
    for (const auto& a : allocators_) {
      AllocatorSnapshot as{a.spec().kind, a.spec().range, {}, a.slack_bytes()};
      for (std::size_t i = 0; i < a.lists().size(); ++i) {
        const auto& l = a.lists()[i];
        as.lists.push_back({l.range(), l.count(), l.bytes(), a.live_blocks(i), a.live_bytes(i)});
      }
      s.allocators.push_back(std::move(as));
    }
    return s;
  }

 private:
  struct LiveEntry {
    Block block;
    Bytes requested;
    std::uint32_t allocator;
  };

  void charge(const CostDelta& c) {
    metrics_.time_units += c.time_units;
    metrics_.mem_accesses += c.mem_accesses;
  }

  // Each malloc or free of a block at a position counts one touch there.
  void touch(Bytes position, bool becomes_live) {
    const std::uint64_t n = ++touches_[position];
    if (becomes_live) {
      live_touch_[position] = n;
    } else {
      live_touch_.erase(position);
    }
  }

  // Position of the live block with the most touches (lowest position on ties).
  std::optional<Bytes> hottest() const {
    std::optional<Bytes> best;
    std::uint64_t best_n = 0;
    for (const auto& [pos, n] : live_touch_) {
      if (n > best_n) {
        best = pos;
        best_n = n;
      }
    }
    return best;
  }

  DMMSpec spec_;
  std::vector<Allocator> allocators_;
  std::vector<Bytes> upper_;
  bool uses_farthest_ = false;

  std::vector<std::vector<LiveEntry>> live_;
  std::uint64_t live_objects_ = 0;
  Bytes live_bytes_ = 0;
  Bytes requested_ = 0;
  Bytes frag_ = 0;
  Bytes arena_top_ = 0;
  Metrics metrics_;

  std::map<Bytes, std::uint64_t> touches_;
  std::map<Bytes, std::uint64_t> live_touch_;
};

}  // namespace dmmsim
