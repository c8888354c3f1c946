#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "dmmsim/generator.hpp"
#include "dmmsim/presets.hpp"
#include "dmmsim/search.hpp"
#include "fixture_path.hpp"

using namespace dmmsim;

namespace {

Genome zeros(std::size_t n = 64) { return Genome{std::vector<Codon>(n, 0)}; }

Trace small_trace() {
  GeneratorSpec g;
  g.object_count = 400;
  g.sizes = {{8, 5}, {24, 3}, {100, 1}, {700, 1}};
  g.lifetime = LifetimeModel::UniformRandom;
  g.max_life_ops = 40;
  g.seed = 3;
  return generate_trace(g);
}

}  // namespace

TEST(Grammar, VocabularyIsPowersAndSizesBelowMax) {
  const Grammar g(100, {3, 8, 100, 50});
  EXPECT_EQ(g.vocabulary(), (std::vector<Bytes>{1, 2, 3, 4, 8, 16, 32, 50, 64}));
}

TEST(Grammar, AllZeroGenomePicksFirstProductions) {
  const Grammar g(1000, {10, 20});
  const auto spec = g.map(zeros(), 2);
  ASSERT_TRUE(spec);
  ASSERT_EQ(spec->allocators.size(), 1u);
  const auto& a = spec->allocators[0];
  EXPECT_EQ(a.kind, AllocatorKind::SegregatedFreeList);
  EXPECT_EQ(a.range, (SizeRange{0, 1000}));
  EXPECT_FALSE(a.split);
  EXPECT_FALSE(a.coalesce);
  EXPECT_EQ(a.data_structure, DataStructure::SLL);
  EXPECT_EQ(a.mechanism, Mechanism::FIRST);
  EXPECT_EQ(a.policy, Policy::FIFO);
}

TEST(Grammar, CodonModChoiceCount) {
  const Grammar g(1000, {});
  auto genome = zeros();
  genome.codons[4] = 7;  // count, kind, split, coalesce, then structure: 7 mod 3 = 1
  EXPECT_EQ(g.map(genome, 0)->allocators[0].data_structure, DataStructure::DLL);
}

TEST(Grammar, RunningOutOfCodonsIsInvalid) {
  const Grammar g(1000, {});
  Genome genome = zeros(16);
  genome.codons[0] = 3;  // four allocators
  genome.codons[1] = 1;
  genome.codons[2] = 2;
  genome.codons[3] = 3;  // three distinct boundaries: 28 decisions in total
  EXPECT_FALSE(g.map(genome, 0));
  EXPECT_TRUE(g.map(genome, 1));
  EXPECT_FALSE(g.map(Genome{}, 2));
}

TEST(Grammar, SimpleSegregatedStorageSkipsSplitCoalesce) {
  const Grammar g(1000, {});
  auto genome = zeros();
  genome.codons[1] = 1;  // SimpleSegregatedStorage
  genome.codons[2] = 1;  // next decision is the structure
  const auto spec = g.map(genome, 0);
  ASSERT_TRUE(spec);
  EXPECT_EQ(spec->allocators[0].kind, AllocatorKind::SimpleSegregatedStorage);
  EXPECT_EQ(spec->allocators[0].data_structure, DataStructure::DLL);
}

TEST(Grammar, RandomGenomesAlwaysMapToValidSpecs) {
  const Grammar g(3616, {2, 4, 40, 100, 1724, 3616});
  std::mt19937_64 rng(17);
  std::size_t mapped = 0;
  for (int i = 0; i < 10000; ++i) {
    Genome genome;
    genome.codons.resize(kMinGenomeLength + rng() % 64);
    for (auto& c : genome.codons) c = static_cast<Codon>(rng());
    const auto spec = g.map(genome, 2);
    if (!spec) continue;
    ++mapped;
    ASSERT_NO_THROW(validate(*spec)) << emit_dmm_spec(*spec);
    ASSERT_EQ(spec->max_size(), 3616u);
    ASSERT_EQ(emit_dmm_spec(*spec), emit_dmm_spec(*g.map(genome, 2)));
  }
  EXPECT_GT(mapped, 9000u);
}

TEST(Evaluate, SelfBaselineAndPenalty) {
  const Trace t = small_trace();
  const auto st = trace_stats(t);
  const auto kng = presets::kingsley(st.max_size);
  const auto base = simulate(t, kng).metrics;
  EXPECT_DOUBLE_EQ(evaluate(kng, t, base, {}, {}, 1e12), 1.0);
  EXPECT_EQ(evaluate(std::nullopt, t, base, {}, {}, 1e12), 1e12);
  TraceStats one;
  one.distinct_sizes = {8};
  EXPECT_EQ(evaluate(presets::exact_segregated(one), t, base, {}, {}, 1e12), 1e12);
}

TEST(Evaluate, CfracCustomBeatsKingsley) {
  std::ifstream gin(fixture("cfrac_like.json"));
  const Trace t = generate_trace(generator_spec_from_json(nlohmann::json::parse(gin)));
  std::ifstream sin(fixture("cfrac_custom.json"));
  std::stringstream ss;
  ss << sin.rdbuf();
  const auto base = simulate(t, presets::kingsley(trace_stats(t).max_size)).metrics;
  EXPECT_LT(evaluate(parse_dmm_spec(ss.str()), t, base, {}, {}, 1e12), 1.0);
}

TEST(Evolve, ParamsValidation) {
  GEParams p;
  p.elite_count = 0;
  EXPECT_THROW(validate(p), ConfigError);
  p = {};
  p.mutation_rate = 2;
  EXPECT_THROW(validate(p), ConfigError);
  p = {};
  p.genome_length = 8;
  EXPECT_THROW(validate(p), ConfigError);
  EXPECT_NO_THROW(validate(GEParams{}));
}

TEST(Evolve, MonotoneHistoryAndDeterminism) {
  const Trace t = small_trace();
  const auto st = trace_stats(t);
  const auto base = simulate(t, presets::kingsley(st.max_size)).metrics;
  GEParams p;
  p.population_size = 20;
  p.generations = 15;
  p.seed = 5;
  const auto a = evolve(t, p, Grammar::for_trace(st), base);
  const auto b = evolve(t, p, Grammar::for_trace(st), base);
  ASSERT_EQ(a.history.size(), 16u);
  for (std::size_t i = 1; i < a.history.size(); ++i) EXPECT_LE(a.history[i], a.history[i - 1]);
  EXPECT_EQ(a.history, b.history);
  ASSERT_TRUE(a.best && b.best);
  EXPECT_EQ(emit_dmm_spec(*a.best), emit_dmm_spec(*b.best));
  EXPECT_DOUBLE_EQ(a.best_fitness, a.history.back());
  EXPECT_DOUBLE_EQ(evaluate(a.best, t, base, {}, {}, p.invalid_penalty), a.best_fitness);
  EXPECT_EQ(history_csv(a.history).substr(0, 26), "generation,best_fitness\n0,");
}
