#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace dmmsim {

using Bytes = std::uint64_t;
using EventIndex = std::uint64_t;

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(fmt::format("line {}: {}", line, what)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  SimulationError(EventIndex event, const std::string& what)
      : Error(fmt::format("event {}: {}", event, what)), event_(event) {}

  EventIndex event() const noexcept { return event_; }

 private:
  EventIndex event_;
};

// Half-open size interval (lo, hi].
struct SizeRange {
  Bytes lo = 0;
  Bytes hi = 0;

  constexpr bool contains(Bytes size) const noexcept { return size > lo && size <= hi; }
  constexpr bool valid() const noexcept { return lo < hi; }

  friend constexpr bool operator==(const SizeRange&, const SizeRange&) = default;
};

// Abstract cost of a free-list or allocator operation.
struct CostDelta {
  std::uint64_t time_units = 0;
  std::uint64_t mem_accesses = 0;

  CostDelta& operator+=(const CostDelta& other) noexcept {
    time_units += other.time_units;
    mem_accesses += other.mem_accesses;
    return *this;
  }
  friend CostDelta operator+(CostDelta a, const CostDelta& b) noexcept { return a += b; }
  friend constexpr bool operator==(const CostDelta&, const CostDelta&) = default;
};

namespace cost {
// One visited node: one access for the link, one for the size field.
inline constexpr CostDelta kNodeVisit{1, 2};
inline constexpr CostDelta kSllLink{1, 2};
inline constexpr CostDelta kDllLink{1, 4};
inline constexpr CostDelta kTreeLink{1, 3};
inline constexpr CostDelta kIndexLevel{1, 1};
inline constexpr CostDelta kSplit{1, 2};
inline constexpr CostDelta kCoalesce{1, 2};
inline constexpr CostDelta kArenaDraw{1, 1};
}  // namespace cost

enum class DataStructure { SLL, DLL, BTREE };
enum class Mechanism { FIRST, BEST, EXACT, FARTHEST };
enum class Policy { FIFO, LIFO };

enum class AllocatorKind {
  SegregatedFreeList,
  SimpleSegregatedStorage,
  SegregatedFit,
  ExactSegregatedFit,
  StrictSegregatedFit,
  BuddySystemBinary,
  BuddySystemFibonacci,
  // Pass-through region: every malloc draws fresh arena, freed bytes are never reused.
  VirtualMemory,
};

namespace detail {

template <typename Enum, std::size_t N>
struct EnumNames {
  std::array<std::string_view, N> names;

  constexpr std::string_view name(Enum e) const { return names.at(static_cast<std::size_t>(e)); }

  Enum parse(std::string_view text, std::string_view what) const {
    for (std::size_t i = 0; i < N; ++i) {
      if (names[i] == text) return static_cast<Enum>(i);
    }
    throw ConfigError(fmt::format("unknown {} '{}'", what, text));
  }
};

inline constexpr EnumNames<DataStructure, 3> kDataStructureNames{{"SLL", "DLL", "BTREE"}};
inline constexpr EnumNames<Mechanism, 4> kMechanismNames{{"FIRST", "BEST", "EXACT", "FARTHEST"}};
inline constexpr EnumNames<Policy, 2> kPolicyNames{{"FIFO", "LIFO"}};
inline constexpr EnumNames<AllocatorKind, 8> kAllocatorKindNames{
    {"SegregatedFreeList", "SimpleSegregatedStorage", "SegregatedFit", "ExactSegregatedFit",
     "StrictSegregatedFit", "BuddySystemBinary", "BuddySystemFibonacci", "VirtualMemory"}};

}  // namespace detail

inline std::string_view to_string(DataStructure v) { return detail::kDataStructureNames.name(v); }
inline std::string_view to_string(Mechanism v) { return detail::kMechanismNames.name(v); }
inline std::string_view to_string(Policy v) { return detail::kPolicyNames.name(v); }
inline std::string_view to_string(AllocatorKind v) { return detail::kAllocatorKindNames.name(v); }

inline DataStructure parse_data_structure(std::string_view s) {
  return detail::kDataStructureNames.parse(s, "data structure");
}
inline Mechanism parse_mechanism(std::string_view s) {
  return detail::kMechanismNames.parse(s, "mechanism");
}
inline Policy parse_policy(std::string_view s) { return detail::kPolicyNames.parse(s, "policy"); }
inline AllocatorKind parse_allocator_kind(std::string_view s) {
  return detail::kAllocatorKindNames.parse(s, "allocator class");
}

inline constexpr bool is_buddy(AllocatorKind k) noexcept {
  return k == AllocatorKind::BuddySystemBinary || k == AllocatorKind::BuddySystemFibonacci;
}

// Bookkeeping bytes carried by a block held in a list of the given structure:
// one machine word per link.
inline constexpr Bytes header_bytes(DataStructure ds, Bytes word_bytes) noexcept {
  switch (ds) {
    case DataStructure::SLL: return word_bytes;
    case DataStructure::DLL: return 2 * word_bytes;
    case DataStructure::BTREE: return 3 * word_bytes;
  }
  return 0;
}

inline constexpr Bytes next_pow2(Bytes v) noexcept {
  Bytes p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace dmmsim
