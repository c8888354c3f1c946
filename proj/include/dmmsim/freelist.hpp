#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "dmmsim/types.hpp"

namespace dmmsim {

// A simulated block. `size` is the full footprint including `header`;
// fit decisions are made on payload().
struct Block {
  EventIndex creation_time = 0;
  Bytes position = 0;
  std::uint32_t owner_list = 0;
  Bytes size = 0;
  Bytes header = 0;

  constexpr Bytes payload() const noexcept { return size - header; }
  constexpr Bytes end() const noexcept { return position + size; }

  friend constexpr bool operator==(const Block&, const Block&) = default;
};

struct FreeListConfig {
  DataStructure data_structure = DataStructure::SLL;
  Mechanism mechanism = Mechanism::FIRST;
  Policy policy = Policy::FIFO;
  SizeRange range{};
};

struct Extraction {
  std::optional<Block> block;
  CostDelta cost;
  std::uint64_t visited = 0;
  // FARTHEST was requested without a hottest position; FIRST was used.
  bool fallback = false;
};

struct Removal {
  std::optional<Block> block;
  CostDelta cost;
};

/// A single free list over a payload range.
///
/// Linked lists keep blocks in logical order: FIFO inserts at the tail, LIFO
/// at the head, and every search walks from the head. BTREE is an unbalanced
/// binary search tree with one node per distinct payload; blocks of that
/// payload hang off the node in a chain kept in policy order.
///
/// Every visited node charges cost::kNodeVisit. Linking or unlinking charges
/// the structure's link cost once.
class FreeList {
 public:
  explicit FreeList(FreeListConfig config, std::uint32_t id = 0) : config_(config), id_(id) {
    if (!config_.range.valid()) {
      throw ConfigError(fmt::format("free list range ({}, {}] is empty", config_.range.lo, config_.range.hi));
    }
  }

  const FreeListConfig& config() const noexcept { return config_; }
  const SizeRange& range() const noexcept { return config_.range; }
  std::uint32_t id() const noexcept { return id_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  Bytes bytes() const noexcept { return bytes_; }

  CostDelta insert(Block block) {
    if (!config_.range.contains(block.payload())) {
      throw Error(fmt::format("block payload {} outside free list range ({}, {}]", block.payload(),
                              config_.range.lo, config_.range.hi));
    }
    block.owner_list = id_;
    ++count_;
    bytes_ += block.size;
    if (config_.data_structure == DataStructure::BTREE) return tree_insert(block);
    if (config_.policy == Policy::FIFO) {
      list_.push_back(block);
    } else {
      list_.push_front(block);
    }
    return link_cost();
  }

  // For EXACT the request is the exact payload wanted (the class size).
  // `mechanism` overrides the configured one for this call.
  Extraction extract(Bytes request, std::optional<Bytes> hottest = std::nullopt,
                     std::optional<Mechanism> mechanism = std::nullopt) {
    Mechanism mech = mechanism.value_or(config_.mechanism);
    Extraction out;
    if (mech == Mechanism::FARTHEST && !hottest) {
      mech = Mechanism::FIRST;
      out.fallback = true;
    }
    if (config_.data_structure == DataStructure::BTREE) {
      tree_extract(mech, request, hottest.value_or(0), out);
    } else {
      list_extract(mech, request, hottest.value_or(0), out);
    }
    if (out.block) {
      --count_;
      bytes_ -= out.block->size;
    }
    return out;
  }

  // Removes the block at `position` with the given payload, if present.
  Removal remove_at(Bytes position, Bytes payload) {
    Removal out;
    if (config_.data_structure == DataStructure::BTREE) {
      tree_remove_at(position, payload, out);
    } else {
      // A doubly linked block knows its neighbours; a singly linked one
      // needs a walk to find its predecessor.
      const bool walk = config_.data_structure == DataStructure::SLL;
      for (auto it = list_.begin(); it != list_.end(); ++it) {
        if (walk || it == list_.begin()) out.cost += cost::kNodeVisit;
        if (it->position == position && it->payload() == payload) {
          out.block = *it;
          list_.erase(it);
          out.cost += link_cost();
          break;
        }
      }
    }
    if (out.block) {
      --count_;
      bytes_ -= out.block->size;
    }
    return out;
  }

  // Blocks in traversal order (head first; in-order for BTREE).
  std::vector<Block> contents() const {
    std::vector<Block> out;
    out.reserve(count_);
    if (config_.data_structure == DataStructure::BTREE) {
      for_each_inorder([&](std::int32_t n) { out.insert(out.end(), nodes_[n].chain.begin(), nodes_[n].chain.end()); });
    } else {
      out.assign(list_.begin(), list_.end());
    }
    return out;
  }

 private:
  static constexpr std::int32_t kNil = -1;

  struct Node {
    Bytes key = 0;
    std::list<Block> chain;  // blocks of this payload, in policy order
    std::int32_t left = kNil;
    std::int32_t right = kNil;
    std::int32_t parent = kNil;
  };

  CostDelta link_cost() const noexcept {
    switch (config_.data_structure) {
      case DataStructure::SLL: return cost::kSllLink;
      case DataStructure::DLL: return cost::kDllLink;
      case DataStructure::BTREE: return cost::kTreeLink;
    }
    return {};
  }

  static Bytes distance(Bytes a, Bytes b) noexcept { return a > b ? a - b : b - a; }

  void list_extract(Mechanism mech, Bytes request, Bytes hottest, Extraction& out) {
    auto chosen = list_.end();
    for (auto it = list_.begin(); it != list_.end(); ++it) {
      ++out.visited;
      const Bytes p = it->payload();
      if (mech == Mechanism::FIRST) {
        if (p >= request) {
          chosen = it;
          break;
        }
      } else if (mech == Mechanism::EXACT) {
        if (p == request) {
          chosen = it;
          break;
        }
      } else if (mech == Mechanism::BEST) {
        if (p >= request && (chosen == list_.end() || p < chosen->payload())) chosen = it;
      } else if (p >= request) {  // FARTHEST
        if (chosen == list_.end() ||
            distance(it->position, hottest) > distance(chosen->position, hottest)) {
          chosen = it;
        }
      }
    }
    out.cost.time_units += out.visited * cost::kNodeVisit.time_units;
    out.cost.mem_accesses += out.visited * cost::kNodeVisit.mem_accesses;
    if (chosen != list_.end()) {
      out.block = *chosen;
      list_.erase(chosen);
      out.cost += link_cost();
    }
  }

  // ---- binary tree -------------------------------------------------------

  std::int32_t new_node(const Block& b) {
    std::int32_t n;
    if (!spare_.empty()) {
      n = spare_.back();
      spare_.pop_back();
      nodes_[n] = Node{b.payload()};
    } else {
      n = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back(Node{b.payload()});
    }
    nodes_[n].chain.push_back(b);
    return n;
  }

  CostDelta tree_insert(const Block& b) {
    CostDelta c;
    std::int32_t parent = kNil;
    std::int32_t cur = root_;
    bool left = false;
    while (cur != kNil) {
      c += cost::kNodeVisit;
      Node& node = nodes_[cur];
      if (node.key == b.payload()) {
        if (config_.policy == Policy::FIFO) {
          node.chain.push_back(b);
        } else {
          node.chain.push_front(b);
        }
        return c + cost::kTreeLink;
      }
      parent = cur;
      left = b.payload() < node.key;
      cur = left ? node.left : node.right;
    }
    const std::int32_t n = new_node(b);
    nodes_[n].parent = parent;
    if (parent == kNil) {
      root_ = n;
    } else if (left) {
      nodes_[parent].left = n;
    } else {
      nodes_[parent].right = n;
    }
    return c + cost::kTreeLink;
  }

  void tree_extract(Mechanism mech, Bytes request, Bytes hottest, Extraction& out) {
    std::int32_t found = kNil;
    std::list<Block>::iterator pick{};
    if (mech == Mechanism::FIRST) {
      for (std::int32_t cur = root_; cur != kNil; cur = nodes_[cur].right) {
        ++out.visited;
        if (nodes_[cur].key >= request) {
          found = cur;
          break;
        }
      }
    } else if (mech == Mechanism::BEST || mech == Mechanism::EXACT) {
      for (std::int32_t cur = root_; cur != kNil;) {
        ++out.visited;
        if (nodes_[cur].key >= request) {
          found = cur;
          cur = nodes_[cur].left;
        } else {
          cur = nodes_[cur].right;
        }
      }
      if (mech == Mechanism::EXACT && found != kNil && nodes_[found].key != request) found = kNil;
    } else {
      for_each_inorder([&](std::int32_t n) {
        for (auto it = nodes_[n].chain.begin(); it != nodes_[n].chain.end(); ++it) {
          ++out.visited;
          if (it->payload() >= request &&
              (found == kNil || distance(it->position, hottest) > distance(pick->position, hottest))) {
            found = n;
            pick = it;
          }
        }
      });
    }
    out.cost.time_units += out.visited * cost::kNodeVisit.time_units;
    out.cost.mem_accesses += out.visited * cost::kNodeVisit.mem_accesses;
    if (found == kNil) return;
    if (mech != Mechanism::FARTHEST) pick = nodes_[found].chain.begin();
    out.block = *pick;
    out.cost += tree_unlink(found, pick);
  }

  void tree_remove_at(Bytes position, Bytes payload, Removal& out) {
    for (std::int32_t cur = root_; cur != kNil;) {
      out.cost += cost::kNodeVisit;
      Node& node = nodes_[cur];
      if (payload != node.key) {
        cur = payload < node.key ? node.left : node.right;
        continue;
      }
      // Chains are doubly linked, so the block unlinks without a walk.
      for (auto it = node.chain.begin(); it != node.chain.end(); ++it) {
        if (it->position == position) {
          out.block = *it;
          out.cost += tree_unlink(cur, it);
          return;
        }
      }
      return;
    }
  }

  // Unlinks one block; the node leaves the tree with its last block.
  CostDelta tree_unlink(std::int32_t n, std::list<Block>::iterator it) {
    nodes_[n].chain.erase(it);
    if (!nodes_[n].chain.empty()) return cost::kTreeLink;
    return cost::kTreeLink + tree_erase(n);
  }

  void transplant(std::int32_t u, std::int32_t v) {
    const std::int32_t p = nodes_[u].parent;
    if (p == kNil) {
      root_ = v;
    } else if (nodes_[p].left == u) {
      nodes_[p].left = v;
    } else {
      nodes_[p].right = v;
    }
    if (v != kNil) nodes_[v].parent = p;
  }

  // Successor search visits only; the caller charges the unlink.
  CostDelta tree_erase(std::int32_t z) {
    CostDelta c;
    Node& zn = nodes_[z];
    if (zn.left == kNil) {
      transplant(z, zn.right);
    } else if (zn.right == kNil) {
      transplant(z, zn.left);
    } else {
      std::int32_t y = zn.right;
      c += cost::kNodeVisit;
      while (nodes_[y].left != kNil) {
        y = nodes_[y].left;
        c += cost::kNodeVisit;
      }
      if (nodes_[y].parent != z) {
        transplant(y, nodes_[y].right);
        nodes_[y].right = nodes_[z].right;
        nodes_[nodes_[y].right].parent = y;
      }
      transplant(z, y);
      nodes_[y].left = nodes_[z].left;
      nodes_[nodes_[y].left].parent = y;
    }
    spare_.push_back(z);
    return c;
  }

  template <typename F>
  void for_each_inorder(F&& visit) const {
    std::vector<std::int32_t> stack;
    std::int32_t cur = root_;
    while (cur != kNil || !stack.empty()) {
      while (cur != kNil) {
        stack.push_back(cur);
        cur = nodes_[cur].left;
      }
      cur = stack.back();
      stack.pop_back();
      visit(cur);
      cur = nodes_[cur].right;
    }
  }

  FreeListConfig config_;
  std::uint32_t id_;
  std::size_t count_ = 0;
  Bytes bytes_ = 0;

  std::list<Block> list_;

  std::vector<Node> nodes_;
  std::vector<std::int32_t> spare_;
  std::int32_t root_ = kNil;
};

}  // namespace dmmsim
