#pragma once

// Naive replayers used as oracles. They share no code with the library:
// plain vectors, linear scans, and an explicit split tree for the buddy case.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ref {

using u64 = std::uint64_t;

struct Op {
  bool malloc = true;
  std::string id;
  u64 size = 0;
};

struct Chosen {
  u64 position = 0;
  u64 size = 0;  // footprint including header
};

struct Result {
  u64 hwm = 0;
  u64 mallocs = 0;
  u64 frees = 0;
  u64 invalid_frees = 0;
  std::vector<Chosen> chosen;  // one per malloc, in order
};

inline u64 pow2_at_least(u64 v) {
  u64 p = 1;
  while (p < v) p *= 2;
  return p;
}

// Live objects: newest allocation of an id is released first.
struct LiveTable {
  std::map<std::string, std::vector<Chosen>> table;
  void add(const std::string& id, Chosen c) { table[id].push_back(c); }
  std::optional<Chosen> take(const std::string& id) {
    auto it = table.find(id);
    if (it == table.end() || it->second.empty()) return std::nullopt;
    Chosen c = it->second.back();
    it->second.pop_back();
    return c;
  }
};

// Power-of-two class stacks, 8-byte header, no reuse across classes.
inline Result kingsley(const std::vector<Op>& ops, u64 header = 8) {
  Result r;
  std::map<u64, std::vector<u64>> free_by_class;  // class -> positions, last = most recent
  LiveTable live;
  u64 top = 0;
  for (const auto& op : ops) {
    if (op.malloc) {
      const u64 cls = pow2_at_least(op.size);
      auto& stack = free_by_class[cls];
      Chosen c{0, cls + header};
      if (!stack.empty()) {
        c.position = stack.back();
        stack.pop_back();
      } else {
        c.position = top;
        top += c.size;
      }
      live.add(op.id, c);
      r.chosen.push_back(c);
      ++r.mallocs;
    } else if (auto c = live.take(op.id)) {
      free_by_class[c->size - header].push_back(c->position);
      ++r.frees;
    } else {
      ++r.invalid_frees;
    }
  }
  r.hwm = top;
  return r;
}

// One list over (0, max], first fit, no splitting. Optional merging with
// position-adjacent free blocks, allowed while the merged payload <= max.
inline Result single_list(const std::vector<Op>& ops, u64 max, bool lifo, bool coalesce, u64 header = 8) {
  Result r;
  std::vector<Chosen> list;  // logical order, head first
  LiveTable live;
  u64 top = 0;
  auto push = [&](Chosen c) {
    if (lifo) {
      list.insert(list.begin(), c);
    } else {
      list.push_back(c);
    }
  };
  for (const auto& op : ops) {
    if (op.malloc) {
      std::optional<Chosen> got;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].size - header >= op.size) {
          got = list[i];
          list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
      if (!got) {
        got = Chosen{top, op.size + header};
        top += got->size;
      }
      live.add(op.id, *got);
      r.chosen.push_back(*got);
      ++r.mallocs;
      continue;
    }
    auto c = live.take(op.id);
    if (!c) {
      ++r.invalid_frees;
      continue;
    }
    ++r.frees;
    Chosen b = *c;
    if (coalesce) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].position + list[i].size == b.position && list[i].size + b.size - header <= max) {
          b = Chosen{list[i].position, list[i].size + b.size};
          list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].position == b.position + b.size && b.size + list[i].size - header <= max) {
          b = Chosen{b.position, b.size + list[i].size};
          list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
    }
    push(b);
  }
  r.hwm = top;
  return r;
}

// Binary buddy over (0, max] (max a power of two), no headers, split and
// coalesce enabled, FIFO class lists. Blocks drawn from the arena are roots;
// splits build an explicit tree and merges only ever rejoin two siblings.
inline Result binary_buddy(const std::vector<Op>& ops, u64 max) {
  struct Node {
    u64 pos, size;
    int parent = -1, left = -1, right = -1;
    bool free = false;
    bool split = false;
  };
  Result r;
  std::vector<Node> nodes;
  std::map<u64, std::vector<int>> lists;  // class -> node ids, head first
  std::map<std::string, std::vector<int>> live;
  u64 top = 0;

  auto erase_from_list = [&](int id) {
    auto& l = lists[nodes[id].size];
    l.erase(std::find(l.begin(), l.end(), id));
  };

  for (const auto& op : ops) {
    if (op.malloc) {
      const u64 cls = pow2_at_least(op.size);
      int got = -1;
      for (u64 c = cls; c <= max && got < 0; c *= 2) {
        auto& l = lists[c];
        if (!l.empty()) {
          got = l.front();
          l.erase(l.begin());
        }
      }
      if (got < 0) {
        nodes.push_back(Node{top, cls});
        got = static_cast<int>(nodes.size()) - 1;
        top += cls;
      } else {
        while (nodes[got].size > cls) {
          const Node parent = nodes[got];
          nodes.push_back(Node{parent.pos, parent.size / 2, got});
          nodes.push_back(Node{parent.pos + parent.size / 2, parent.size / 2, got});
          const int l = static_cast<int>(nodes.size()) - 2, rgt = l + 1;
          nodes[got].left = l;
          nodes[got].right = rgt;
          nodes[got].split = true;
          nodes[rgt].free = true;
          lists[nodes[rgt].size].push_back(rgt);
          got = l;
        }
      }
      nodes[got].free = false;
      live[op.id].push_back(got);
      r.chosen.push_back({nodes[got].pos, nodes[got].size});
      ++r.mallocs;
      continue;
    }
    auto it = live.find(op.id);
    if (it == live.end() || it->second.empty()) {
      ++r.invalid_frees;
      continue;
    }
    int id = it->second.back();
    it->second.pop_back();
    ++r.frees;
    for (;;) {
      const int p = nodes[id].parent;
      if (p < 0) break;
      const int sib = nodes[p].left == id ? nodes[p].right : nodes[p].left;
      if (!nodes[sib].free || nodes[sib].split) break;
      erase_from_list(sib);
      nodes[sib].free = false;
      nodes[p].split = false;
      nodes[p].left = nodes[p].right = -1;
      nodes[id].parent = -1;  // detached
      nodes[sib].parent = -1;
      id = p;
    }
    nodes[id].free = true;
    lists[nodes[id].size].push_back(id);
  }
  r.hwm = top;
  return r;
}

// Brute-force first fit over an array of payloads: index of the first fit
// and the number of elements examined.
struct ScanResult {
  std::optional<std::size_t> index;
  u64 visited = 0;
};

inline ScanResult first_fit_scan(const std::vector<u64>& payloads, u64 request) {
  ScanResult s;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    ++s.visited;
    if (payloads[i] >= request) {
      s.index = i;
      return s;
    }
  }
  return s;
}

// Random malloc/free script; at most `max_live` objects alive at a time.
inline std::vector<Op> random_ops(std::mt19937_64& rng, std::size_t events, u64 max_size, std::size_t max_live = 64,
                                  double free_bias = 0.45) {
  std::vector<Op> ops;
  std::vector<std::string> alive;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<u64> size(1, max_size);
  u64 next = 0;
  while (ops.size() < events) {
    const bool do_free = !alive.empty() && (alive.size() >= max_live || unit(rng) < free_bias);
    if (do_free) {
      std::uniform_int_distribution<std::size_t> pick(0, alive.size() - 1);
      const std::size_t k = pick(rng);
      ops.push_back({false, alive[k], 0});
      alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      std::string id = "o" + std::to_string(next++);
      ops.push_back({true, id, size(rng)});
      alive.push_back(id);
    }
  }
  return ops;
}

}  // namespace ref
