#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "dmmsim/freelist.hpp"
#include "dmmsim/types.hpp"

namespace dmmsim {

struct AllocatorSpec {
  AllocatorKind kind = AllocatorKind::SegregatedFreeList;
  SizeRange range{};
  bool split = false;
  bool coalesce = false;
  DataStructure data_structure = DataStructure::SLL;
  Mechanism mechanism = Mechanism::FIRST;
  Policy policy = Policy::FIFO;
  // Class sizes. Required for ExactSegregatedFit and StrictSegregatedFit;
  // derived (and must be left empty) for buddy systems.
  std::vector<Bytes> size_series;
  // Optional upper bounds of sub-range lists for the segregated kinds.
  std::vector<Bytes> boundaries;

  friend bool operator==(const AllocatorSpec&, const AllocatorSpec&) = default;
};

inline std::vector<Bytes> binary_series(SizeRange range) {
  std::vector<Bytes> out;
  for (Bytes p = 1;; p <<= 1) {
    if (p > range.lo) out.push_back(p);
    if (p >= range.hi) break;
  }
  return out;
}

// Distinct Fibonacci numbers 1, 2, 3, 5, 8, ... above lo, up to the first >= hi.
inline std::vector<Bytes> fibonacci_series(SizeRange range) {
  std::vector<Bytes> out;
  for (Bytes a = 1, b = 2;; std::tie(a, b) = std::pair{b, a + b}) {
    if (a > range.lo) out.push_back(a);
    if (a >= range.hi) break;
  }
  return out;
}

struct MallocResult {
  std::optional<Block> block;  // empty: the caller must draw from the arena
  Bytes class_size = 0;
  CostDelta cost;
};

/// One allocator of the taxonomy. Owns the free lists partitioning its class
/// domain and implements rounding, splitting and coalescing for its kind.
///
/// Buddy blocks carry no inline header so that sizes stay exact members of
/// the series; all other kinds charge the header of their list structure.
class Allocator {
 public:
  Allocator(AllocatorSpec spec, Bytes word_bytes = 8) : spec_(std::move(spec)) {
    validate_and_build(word_bytes);
  }

  const AllocatorSpec& spec() const noexcept { return spec_; }
  const std::vector<FreeList>& lists() const noexcept { return lists_; }
  Bytes header() const noexcept { return header_; }
  std::uint64_t split_count() const noexcept { return splits_; }
  std::uint64_t coalesce_count() const noexcept { return coalesces_; }
  std::uint64_t fallback_count() const noexcept { return fallbacks_; }
  Bytes slack_bytes() const noexcept { return slack_; }
  Bytes live_bytes(std::size_t list) const { return live_.at(list); }
  std::uint64_t live_blocks(std::size_t list) const { return live_count_.at(list); }

  Bytes free_bytes() const noexcept {
    Bytes total = 0;
    for (const auto& l : lists_) total += l.bytes();
    return total;
  }

  bool class_indexed() const noexcept {
    return is_buddy(spec_.kind) || spec_.kind == AllocatorKind::ExactSegregatedFit ||
           spec_.kind == AllocatorKind::StrictSegregatedFit;
  }

  // Smallest class able to hold the request.
  Bytes class_of(Bytes request) const {
    if (!spec_.range.contains(request)) {
      throw Error(fmt::format("request {} outside allocator range ({}, {}]", request, spec_.range.lo,
                              spec_.range.hi));
    }
    if (!class_indexed()) return request;
    auto it = std::lower_bound(classes_.begin(), classes_.end(), request);
    if (spec_.kind == AllocatorKind::ExactSegregatedFit && *it != request) {
      throw Error(fmt::format("size {} has no exact class", request));
    }
    return *it;
  }

  // Index of the list whose range covers the payload.
  std::size_t covering(Bytes payload) const {
    auto it = std::lower_bound(upper_.begin(), upper_.end(), payload);
    if (it == upper_.end() || payload <= spec_.range.lo) {
      throw Error(fmt::format("payload {} not representable in allocator ({}, {}]", payload, spec_.range.lo,
                              spec_.range.hi));
    }
    return static_cast<std::size_t>(it - upper_.begin());
  }

  MallocResult malloc(Bytes request, EventIndex now, std::optional<Bytes> hottest = std::nullopt) {
    MallocResult out;
    out.class_size = class_of(request);
    if (spec_.kind == AllocatorKind::VirtualMemory) return out;

    const std::size_t idx = covering(out.class_size);
    auto got = take(idx, out.class_size, hottest, /*for_split=*/false, out.cost);
    if (!got && spec_.split) {
      for (std::size_t j = idx + 1; j < lists_.size() && !got; ++j) {
        got = take(j, out.class_size, hottest, /*for_split=*/true, out.cost);
      }
    }
    if (!got) return out;

    Block b = *got;
    b.creation_time = now;
    if (spec_.split) b = is_buddy(spec_.kind) ? buddy_split(b, out.class_size, now, out.cost)
                                              : trim(b, out.class_size, now, out.cost);
    mark_live(b);
    out.block = b;
    return out;
  }

  // A fresh block for `class_size` drawn from the arena at `position`.
  Block carve(Bytes position, Bytes class_size, EventIndex now) {
    Block b{now, position, 0, class_size + header_, header_};
    mark_live(b);
    return b;
  }

  CostDelta free(Block block, EventIndex now) {
    const std::size_t owner = covering(block.payload());
    live_[owner] -= block.size;
    --live_count_[owner];
    block.creation_time = now;
    if (spec_.kind == AllocatorKind::VirtualMemory) {
      slack_ += block.size;
      return link_cost();
    }
    CostDelta c;
    if (is_buddy(spec_.kind)) {
      if (spec_.coalesce) block = buddy_coalesce(block, now, c);
    } else if (spec_.coalesce) {
      block = adjacent_coalesce(block, now, c);
    }
    put(block, c);
    return c;
  }

 private:
  struct Relation {
    Bytes parent_pos, parent_size, sibling_pos, sibling_size;
  };

  struct KeyHash {
    std::size_t operator()(const std::pair<Bytes, Bytes>& k) const noexcept {
      return std::hash<Bytes>{}(k.first * 0x9E3779B97F4A7C15ULL ^ k.second);
    }
  };
  using Key = std::pair<Bytes, Bytes>;  // (position, size)

  CostDelta link_cost() const noexcept {
    switch (spec_.data_structure) {
      case DataStructure::SLL: return cost::kSllLink;
      case DataStructure::DLL: return cost::kDllLink;
      case DataStructure::BTREE: return cost::kTreeLink;
    }
    return {};
  }

  void validate_and_build(Bytes word_bytes) {
    const auto& r = spec_.range;
    if (!r.valid()) throw ConfigError(fmt::format("allocator range ({}, {}] is empty", r.lo, r.hi));
    if (spec_.kind == AllocatorKind::SimpleSegregatedStorage && (spec_.split || spec_.coalesce)) {
      throw ConfigError("SimpleSegregatedStorage cannot split or coalesce");
    }
    if (spec_.kind == AllocatorKind::VirtualMemory && (spec_.split || spec_.coalesce)) {
      throw ConfigError("VirtualMemory cannot split or coalesce");
    }
    header_ = is_buddy(spec_.kind) ? 0 : header_bytes(spec_.data_structure, word_bytes);

    switch (spec_.kind) {
      case AllocatorKind::BuddySystemBinary:
      case AllocatorKind::BuddySystemFibonacci: {
        auto derived = spec_.kind == AllocatorKind::BuddySystemBinary ? binary_series(r) : fibonacci_series(r);
        if (!spec_.size_series.empty() && spec_.size_series != derived) {
          throw ConfigError("buddy size series must be the derived series for its range");
        }
        classes_ = std::move(derived);
        upper_ = classes_;
        break;
      }
      case AllocatorKind::ExactSegregatedFit:
      case AllocatorKind::StrictSegregatedFit: {
        if (spec_.size_series.empty()) throw ConfigError(fmt::format("{} needs a size series", to_string(spec_.kind)));
        auto series = spec_.size_series;
        std::sort(series.begin(), series.end());
        series.erase(std::unique(series.begin(), series.end()), series.end());
        if (series.front() <= r.lo) throw ConfigError("size series entries must lie above the range low bound");
        if (series.back() < r.hi) throw ConfigError("size series does not cover the range");
        series.erase(std::upper_bound(series.begin(), series.end(), *std::lower_bound(series.begin(), series.end(), r.hi)),
                     series.end());
        classes_ = series;
        upper_ = series;
        break;
      }
      default: {
        std::vector<Bytes> bounds = spec_.boundaries;
        if (bounds.empty() && spec_.kind == AllocatorKind::SegregatedFit) {
          for (Bytes p = 1; p < r.hi; p <<= 1) {
            if (p > r.lo) bounds.push_back(p);
          }
        }
        std::sort(bounds.begin(), bounds.end());
        bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
        for (Bytes b : bounds) {
          if (b <= r.lo || b > r.hi) throw ConfigError(fmt::format("boundary {} outside range ({}, {}]", b, r.lo, r.hi));
        }
        if (bounds.empty() || bounds.back() != r.hi) bounds.push_back(r.hi);
        upper_ = bounds;
        break;
      }
    }

    Bytes lo = r.lo;
    for (Bytes hi : upper_) {
      lists_.emplace_back(FreeListConfig{spec_.data_structure, spec_.mechanism, spec_.policy, {lo, hi}},
                          static_cast<std::uint32_t>(lists_.size()));
      lo = hi;
    }
    live_.assign(lists_.size(), 0);
    live_count_.assign(lists_.size(), 0);
  }

  void mark_live(Block& b) {
    const std::size_t owner = covering(b.payload());
    b.owner_list = static_cast<std::uint32_t>(owner);
    live_[owner] += b.size;
    ++live_count_[owner];
  }

  std::optional<Block> take(std::size_t idx, Bytes class_size, std::optional<Bytes> hottest, bool for_split,
                            CostDelta& c) {
    FreeList& list = lists_[idx];
    if (list.empty()) return std::nullopt;
    // Larger lists never hold the requested class, so an exact search there
    // degrades to taking any block big enough.
    const bool exact = list.config().mechanism == Mechanism::EXACT;
    Extraction e = for_split && exact ? list.extract(class_size, hottest, Mechanism::FIRST)
                                      : list.extract(class_size, hottest);
    c += e.cost;
    if (e.fallback) ++fallbacks_;
    if (e.block) forget_free(*e.block);
    return e.block;
  }

  void put(const Block& b, CostDelta& c) {
    const std::size_t idx = covering(b.payload());
    c += lists_[idx].insert(b);
    if (is_buddy(spec_.kind)) {
      if (spec_.coalesce) free_set_.insert({b.position, b.size});
    } else if (spec_.coalesce) {
      free_pos_[b.position] = b.size;
    }
  }

  void forget_free(const Block& b) {
    if (is_buddy(spec_.kind)) {
      if (spec_.coalesce) free_set_.erase({b.position, b.size});
    } else if (spec_.coalesce) {
      free_pos_.erase(b.position);
    }
  }

  bool is_class(Bytes size) const { return std::binary_search(classes_.begin(), classes_.end(), size); }

  // Children (first at the block's position, second after it), if splittable.
  std::optional<std::pair<Bytes, Bytes>> buddy_children(Bytes size) const {
    Bytes first = 0, second = 0;
    if (spec_.kind == AllocatorKind::BuddySystemBinary) {
      if (size < 2) return std::nullopt;
      first = second = size / 2;
    } else {
      Bytes a = 1, b = 1;  // consecutive Fibonacci numbers
      while (a + b < size) std::tie(a, b) = std::pair{b, a + b};
      if (a + b != size) return std::nullopt;
      first = b;
      second = a;
    }
    if (!is_class(first) || !is_class(second)) return std::nullopt;
    return std::pair{first, second};
  }

  Block buddy_split(Block b, Bytes target, EventIndex now, CostDelta& c) {
    while (b.size > target) {
      auto kids = buddy_children(b.size);
      if (!kids) break;
      const auto [first, second] = *kids;
      Block left{now, b.position, 0, first, 0};
      Block right{now, b.position + first, 0, second, 0};
      if (spec_.coalesce) {
        relations_[{left.position, left.size}] = {b.position, b.size, right.position, right.size};
        relations_[{right.position, right.size}] = {b.position, b.size, left.position, left.size};
      }
      ++splits_;
      c += cost::kSplit;
      // Fibonacci: keep the smaller half when it still fits.
      if (second < first && second >= target) {
        put(left, c);
        b = right;
      } else {
        put(right, c);
        b = left;
      }
    }
    return b;
  }

  Block buddy_coalesce(Block b, EventIndex now, CostDelta& c) {
    for (;;) {
      auto rel = relations_.find({b.position, b.size});
      if (rel == relations_.end()) break;
      const Relation r = rel->second;
      if (!free_set_.contains({r.sibling_pos, r.sibling_size})) break;
      Removal removed = lists_[covering(r.sibling_size)].remove_at(r.sibling_pos, r.sibling_size);
      c += removed.cost;
      free_set_.erase({r.sibling_pos, r.sibling_size});
      relations_.erase(rel);
      relations_.erase({r.sibling_pos, r.sibling_size});
      b = Block{now, r.parent_pos, 0, r.parent_size, 0};
      ++coalesces_;
      c += cost::kCoalesce;
    }
    return b;
  }

  // Splits `b` into the class-size block and a reusable remainder. A
  // remainder too small for this allocator stays attached to the block.
  Block trim(Block b, Bytes class_size, EventIndex now, CostDelta& c) {
    const Bytes need = class_size + header_;
    if (b.size <= need + header_) return b;
    const Bytes rest = b.size - need;
    const Bytes rest_payload = rest - header_;
    if (rest_payload <= spec_.range.lo || rest_payload > upper_.back()) return b;
    put(Block{now, b.position + need, 0, rest, header_}, c);
    b.size = need;
    ++splits_;
    c += cost::kSplit;
    return b;
  }

  Block adjacent_coalesce(Block b, EventIndex now, CostDelta& c) {
    const Bytes cap = upper_.back();
    // predecessor ending at b.position
    auto next = free_pos_.lower_bound(b.position);
    if (next != free_pos_.begin()) {
      auto prev = std::prev(next);
      if (prev->first + prev->second == b.position && prev->second + b.size - header_ <= cap) {
        const Bytes pos = prev->first, size = prev->second;
        Removal r = lists_[covering(size - header_)].remove_at(pos, size - header_);
        c += r.cost;
        free_pos_.erase(prev);
        b = Block{now, pos, 0, size + b.size, header_};
        ++coalesces_;
        c += cost::kCoalesce;
      }
    }
    next = free_pos_.find(b.end());
    if (next != free_pos_.end() && b.size + next->second - header_ <= cap) {
      const Bytes pos = next->first, size = next->second;
      Removal r = lists_[covering(size - header_)].remove_at(pos, size - header_);
      c += r.cost;
      free_pos_.erase(next);
      b = Block{now, b.position, 0, b.size + size, header_};
      ++coalesces_;
      c += cost::kCoalesce;
    }
    return b;
  }

  AllocatorSpec spec_;
  Bytes header_ = 0;
  std::vector<Bytes> classes_;  // class sizes for class-indexed kinds
  std::vector<Bytes> upper_;    // upper bound of each list
  std::vector<FreeList> lists_;
  std::vector<Bytes> live_;
  std::vector<std::uint64_t> live_count_;

  std::uint64_t splits_ = 0;
  std::uint64_t coalesces_ = 0;
  std::uint64_t fallbacks_ = 0;
  Bytes slack_ = 0;

  std::unordered_map<Key, Relation, KeyHash> relations_;
  std::unordered_set<Key, KeyHash> free_set_;
  std::map<Bytes, Bytes> free_pos_;  // position -> size of free blocks
};

}  // namespace dmmsim
