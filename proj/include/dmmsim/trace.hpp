#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "dmmsim/types.hpp"

namespace dmmsim {

enum class EventKind : std::uint8_t { Malloc, Free };

using ObjectId = std::uint32_t;

// One malloc or free. `object` indexes the owning trace's label table;
// `size` is meaningful for mallocs only.
struct TraceEvent {
  EventKind kind = EventKind::Malloc;
  ObjectId object = 0;
  Bytes size = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Ordered malloc/free stream. Object identifiers are opaque labels interned
// into a table so that replay never touches strings.
class Trace {
 public:
  void add_malloc(std::string_view id, Bytes size) {
    if (size == 0) throw Error(fmt::format("zero-size allocation for '{}'", id));
    events_.push_back({EventKind::Malloc, intern(id), size});
  }

  void add_free(std::string_view id) { events_.push_back({EventKind::Free, intern(id), 0}); }

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  const std::string& label(ObjectId id) const { return labels_.at(id); }
  std::size_t label_count() const noexcept { return labels_.size(); }

  void reserve(std::size_t events) { events_.reserve(events); }

 private:
  ObjectId intern(std::string_view id) {
    if (id.empty()) throw Error("empty object identifier");
    auto [it, inserted] =
        index_.try_emplace(std::string(id), static_cast<ObjectId>(labels_.size()));
    if (inserted) labels_.emplace_back(id);
    return it->second;
  }

  std::vector<TraceEvent> events_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, ObjectId> index_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace detail

// Reads the line format:  `M <id> <size>` | `F <id>` | `# comment`.
// Blank lines are skipped. Any malformed line raises ParseError naming it.
inline Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;

    const auto op = tokens.front();
    if (op == "M") {
      if (tokens.size() != 3) throw ParseError(line_no, "malloc needs `M <id> <size>`");
      Bytes size = 0;
      const auto text = tokens[2];
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), size);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line_no, fmt::format("non-numeric size '{}'", text));
      }
      if (size == 0) throw ParseError(line_no, "zero-size allocation");
      trace.add_malloc(tokens[1], size);
    } else if (op == "F") {
      if (tokens.size() != 2) throw ParseError(line_no, "free needs `F <id>`");
      trace.add_free(tokens[1]);
    } else {
      throw ParseError(line_no, fmt::format("bad opcode '{}'", op));
    }
  }
  return trace;
}

inline Trace parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

inline void emit_trace(const Trace& trace, std::ostream& out) {
  std::string buffer;
  buffer.reserve(1 << 16);
  for (const auto& e : trace.events()) {
    if (e.kind == EventKind::Malloc) {
      fmt::format_to(std::back_inserter(buffer), "M {} {}\n", trace.label(e.object), e.size);
    } else {
      fmt::format_to(std::back_inserter(buffer), "F {}\n", trace.label(e.object));
    }
    if (buffer.size() > (1 << 15)) {
      out << buffer;
      buffer.clear();
    }
  }
  out << buffer;
}

inline std::string emit_trace(const Trace& trace) {
  std::ostringstream out;
  emit_trace(trace, out);
  return out.str();
}

struct TraceStats {
  std::uint64_t objects = 0;
  Bytes total_bytes = 0;
  Bytes max_in_use_bytes = 0;
  std::uint64_t memory_ops = 0;
  std::uint64_t free_events = 0;
  std::set<Bytes> distinct_sizes;
  Bytes max_size = 0;
  std::uint64_t invalid_mallocs = 0;
  std::uint64_t invalid_frees = 0;

  double avg_size() const noexcept {
    return objects == 0 ? 0.0 : static_cast<double>(total_bytes) / static_cast<double>(objects);
  }
};

// One pass. Frees match the newest live malloc with the same id; a free with
// no live match counts as invalid and leaves the live bytes unchanged.
inline TraceStats trace_stats(const Trace& trace) {
  TraceStats s;
  std::vector<std::vector<Bytes>> live(trace.label_count());
  Bytes in_use = 0;
  for (const auto& e : trace.events()) {
    ++s.memory_ops;
    if (e.kind == EventKind::Malloc) {
      ++s.objects;
      s.total_bytes += e.size;
      s.distinct_sizes.insert(e.size);
      s.max_size = std::max(s.max_size, e.size);
      live[e.object].push_back(e.size);
      in_use += e.size;
      s.max_in_use_bytes = std::max(s.max_in_use_bytes, in_use);
    } else {
      ++s.free_events;
      auto& stack = live[e.object];
      if (stack.empty()) {
        ++s.invalid_frees;
      } else {
        in_use -= stack.back();
        stack.pop_back();
      }
    }
  }
  for (const auto& stack : live) s.invalid_mallocs += stack.size();
  return s;
}

}  // namespace dmmsim
