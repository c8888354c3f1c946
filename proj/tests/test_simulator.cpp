#include <gtest/gtest.h>

#include <random>

#include "dmmsim/presets.hpp"
#include "dmmsim/simulator.hpp"

using namespace dmmsim;

namespace {

DMMSpec single_list(Bytes max, Bytes word_bytes = 8) {
  AllocatorSpec a;
  a.kind = AllocatorKind::SegregatedFreeList;
  a.range = {0, max};
  return DMMSpec{{a}, word_bytes};
}

Trace random_trace(std::uint64_t seed, std::size_t events, Bytes max) {
  std::mt19937_64 rng(seed);
  Trace t;
  std::vector<std::string> alive;
  std::size_t next = 0;
  while (t.size() < events) {
    if (!alive.empty() && rng() % 2) {
      const std::size_t k = rng() % alive.size();
      t.add_free(alive[k]);
      alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      alive.push_back("x" + std::to_string(next++));
      t.add_malloc(alive.back(), 1 + rng() % max);
    }
  }
  return t;
}

}  // namespace

TEST(Simulate, EmptyTraceGivesZeroMetrics) {
  const auto r = simulate(Trace{}, single_list(10));
  EXPECT_EQ(r.metrics, Metrics{});
  EXPECT_EQ(r.energy, 0.0);
  EXPECT_FALSE(r.fitness);
}

TEST(Simulate, HandTraceHighWaterMark) {
  const auto r = simulate(parse_trace("M a 100\nM b 50\nF a\nM c 80\n"), single_list(100, 0));
  EXPECT_EQ(r.metrics.hwm_bytes, 150u);
  EXPECT_EQ(r.metrics.malloc_count, 3u);
  EXPECT_EQ(r.metrics.free_count, 1u);
  EXPECT_EQ(r.metrics.invalid_mallocs, 2u);
}

TEST(Simulate, AbortNamesTheEvent) {
  try {
    simulate(parse_trace("M a 10\nF a\nM b 500\n"), single_list(100));
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.event(), 2u);
  }
}

TEST(Simulate, CounterIdentities) {
  const Trace t = random_trace(3, 3000, 700);
  const auto st = trace_stats(t);
  for (const auto& name : presets::names()) {
    const auto r = simulate(t, presets::by_name(name, st));
    EXPECT_EQ(r.metrics.malloc_count, st.objects) << name;
    EXPECT_EQ(r.metrics.free_count + r.metrics.invalid_frees, st.free_events) << name;
    EXPECT_EQ(r.metrics.malloc_count + r.metrics.free_count, st.memory_ops - st.invalid_frees) << name;
    EXPECT_GE(r.metrics.hwm_bytes, st.max_in_use_bytes) << name;
    EXPECT_GE(r.metrics.peak_requested_bytes, st.max_in_use_bytes) << name;
  }
}

TEST(Simulate, SnapshotConsistentWithConservation) {
  const Trace t = random_trace(4, 2000, 300);
  const auto r = simulate(t, presets::lea(300));
  EXPECT_EQ(r.snapshot.arena_top, r.metrics.hwm_bytes);
  Bytes total = 0;
  for (const auto& a : r.snapshot.allocators) {
    total += a.slack_bytes;
    for (const auto& l : a.lists) total += l.free_bytes + l.live_bytes;
  }
  EXPECT_EQ(total, r.snapshot.arena_top);
}

TEST(Simulate, HookSeesEveryEvent) {
  const Trace t = random_trace(5, 500, 64);
  std::size_t seen = 0, mallocs = 0;
  simulate(t, presets::kingsley(64), {}, {}, {}, [&](EventIndex i, const TraceEvent& e, const DMM& dmm,
                                                     const MallocOutcome* m) {
    EXPECT_EQ(i, seen++);
    EXPECT_EQ(m != nullptr, e.kind == EventKind::Malloc);
    if (m) ++mallocs;
    EXPECT_TRUE(dmm.conserved());
  });
  EXPECT_EQ(seen, t.size());
  EXPECT_EQ(mallocs, trace_stats(t).objects);
}

TEST(Simulate, Deterministic) {
  const Trace t = random_trace(6, 2000, 500);
  const auto spec = presets::fibonacci_buddy(500);
  EXPECT_EQ(to_json(simulate(t, spec)).dump(), to_json(simulate(t, spec)).dump());
}

TEST(Simulate, FitnessAgainstBaseline) {
  const Trace t = random_trace(7, 1000, 100);
  const auto base = simulate(t, presets::kingsley(100)).metrics;
  const auto self = simulate(t, presets::kingsley(100), {}, {}, base);
  ASSERT_TRUE(self.fitness);
  EXPECT_DOUBLE_EQ(*self.fitness, 1.0);
}

TEST(Compare, SingleBaselineRow) {
  const Trace t = random_trace(8, 500, 100);
  const auto r = compare(t, {{"kng", presets::kingsley(100)}}, "kng");
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(r.rows[0].ratios.memory, 1.0);
  EXPECT_DOUBLE_EQ(r.rows[0].ratios.fitness, 1.0);
}

TEST(Compare, ExactBeatsKingsleyOnMemoryForOddSizes) {
  Trace t;
  for (int i = 0; i < 100; ++i) t.add_malloc("o" + std::to_string(i), 33);
  const auto st = trace_stats(t);
  const auto r = compare(t, {{"kng", presets::kingsley(33)}, {"exa", presets::exact_segregated(st)}}, "kng");
  // 100 * (64+8) against 100 * (33+8).
  EXPECT_DOUBLE_EQ(r.rows[1].ratios.memory, 7200.0 / 4100.0);
  EXPECT_GT(r.rows[1].ratios.memory, 1.0);
}

TEST(Compare, FailuresAreReportedPerCandidate) {
  const Trace t = parse_trace("M a 8\nM b 9\nF a\n");
  TraceStats only8;
  only8.distinct_sizes = {8};
  const auto r = compare(t, {{"kng", presets::kingsley(9)}, {"exa", presets::exact_segregated(only8)}}, "kng");
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[1].metrics);
  EXPECT_NE(r.rows[1].error.find("event 1"), std::string::npos);
  EXPECT_THROW(compare(t, {{"kng", presets::kingsley(9)}}, "lea"), ConfigError);
  EXPECT_THROW(compare(t, {{"exa", presets::exact_segregated(only8)}}, "exa"), Error);
}

TEST(Compare, ParallelEqualsSequential) {
  const Trace t = random_trace(9, 3000, 2000);
  const auto st = trace_stats(t);
  std::vector<NamedSpec> specs;
  for (const auto& n : presets::names()) specs.emplace_back(n, presets::by_name(n, st));
  EXPECT_EQ(report_csv(compare(t, specs, "kng", {}, {}, false)), report_csv(compare(t, specs, "kng", {}, {}, true)));
}
