#include <gtest/gtest.h>

#include <random>

#include "dmmsim/presets.hpp"
#include "dmmsim/simulator.hpp"
#include "reference.hpp"

using namespace dmmsim;

namespace {

Trace to_trace(const std::vector<ref::Op>& ops) {
  Trace t;
  for (const auto& op : ops) {
    if (op.malloc) {
      t.add_malloc(op.id, op.size);
    } else {
      t.add_free(op.id);
    }
  }
  return t;
}

void expect_same(const Trace& t, const DMMSpec& spec, const ref::Result& want, const std::string& what) {
  std::vector<ref::Chosen> chosen;
  const auto got = simulate(t, spec, {}, {}, {}, [&](EventIndex, const TraceEvent&, const DMM&, const MallocOutcome* m) {
    if (m) chosen.push_back({m->block.position, m->block.size});
  });
  ASSERT_EQ(got.metrics.hwm_bytes, want.hwm) << what;
  ASSERT_EQ(got.metrics.malloc_count, want.mallocs) << what;
  ASSERT_EQ(got.metrics.free_count, want.frees) << what;
  ASSERT_EQ(got.metrics.invalid_frees, want.invalid_frees) << what;
  ASSERT_EQ(chosen.size(), want.chosen.size()) << what;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    ASSERT_EQ(chosen[i].position, want.chosen[i].position) << what << " malloc #" << i;
    ASSERT_EQ(chosen[i].size, want.chosen[i].size) << what << " malloc #" << i;
  }
}

DMMSpec single_list(Bytes max, Policy p, bool coalesce) {
  AllocatorSpec a;
  a.kind = AllocatorKind::SegregatedFreeList;
  a.range = {0, max};
  a.policy = p;
  a.coalesce = coalesce;
  return DMMSpec{{a}};
}

DMMSpec buddy(Bytes max) {
  AllocatorSpec a;
  a.kind = AllocatorKind::BuddySystemBinary;
  a.range = {0, max};
  a.split = a.coalesce = true;
  return DMMSpec{{a}};
}

}  // namespace

TEST(Oracle, KingsleyMatchesReference) {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 100; ++i) {
    const auto ops = ref::random_ops(rng, 1 + rng() % 1000, 1 + rng() % 5000);
    const Trace t = to_trace(ops);
    expect_same(t, presets::kingsley(trace_stats(t).max_size), ref::kingsley(ops), "kingsley");
  }
}

TEST(Oracle, SingleFirstFitListMatchesReference) {
  std::mt19937_64 rng(202);
  for (int i = 0; i < 100; ++i) {
    const Bytes max = 1 + rng() % 600;
    const auto ops = ref::random_ops(rng, 1 + rng() % 1000, max);
    const Trace t = to_trace(ops);
    const bool lifo = i % 2;
    const bool coalesce = (i / 2) % 2;
    expect_same(t, single_list(max, lifo ? Policy::LIFO : Policy::FIFO, coalesce),
                ref::single_list(ops, max, lifo, coalesce),
                fmt::format("list lifo={} coalesce={} trace={}", lifo, coalesce, i));
  }
}

TEST(Oracle, BinaryBuddyMatchesReference) {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 100; ++i) {
    const Bytes max = Bytes{1} << (3 + rng() % 10);
    const auto ops = ref::random_ops(rng, 1 + rng() % 1000, max);
    expect_same(to_trace(ops), buddy(max), ref::binary_buddy(ops, max), fmt::format("buddy trace={}", i));
  }
}

TEST(Oracle, ReferenceSanity) {
  // The reference itself on the hand trace: a=[0,108) b=[108,166) c reuses a.
  const std::vector<ref::Op> ops{{true, "a", 100}, {true, "b", 50}, {false, "a", 0}, {true, "c", 80}};
  const auto r = ref::single_list(ops, 100, false, false);
  EXPECT_EQ(r.hwm, 166u);
  EXPECT_EQ(r.chosen[2].position, 0u);
  const auto k = ref::kingsley(ops);
  EXPECT_EQ(k.hwm, 128u + 8 + 64 + 8);  // c reuses the 128 class block of a
  EXPECT_EQ(k.chosen[2].position, 0u);
}
