// Command-line front end: stats, gen, sim, compare, search, show.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dmmsim/dmmsim.hpp"

namespace {

using namespace dmmsim;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  out << text;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open trace '{}'", path));
  try {
    return parse_trace(in);
  } catch (const ParseError& e) {
    throw Error(fmt::format("{}: {}", path, e.what()));
  }
}

DMMSpec resolve_dmm(const std::string& name, const TraceStats& stats) {
  if (presets::is_preset(name)) return presets::by_name(name, stats);
  return parse_dmm_spec(read_file(name));
}

std::vector<double> parse_triple(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: '{}' is not a number", what, item));
    }
  }
  if (v.size() != 3) throw ConfigError(fmt::format("{} needs three comma-separated values", what));
  return v;
}

struct Common {
  std::string weights;
  std::string energy_model;
  std::string format = "json";

  FitnessWeights fitness_weights() const {
    FitnessWeights w;
    if (!weights.empty()) {
      auto v = parse_triple(weights, "--weights");
      w = {v[0], v[1], v[2]};
    }
    validate(w);
    return w;
  }

  EnergyModel energy() const {
    EnergyModel m;
    if (!energy_model.empty()) {
      auto v = parse_triple(energy_model, "--energy-model");
      m = {v[0], v[1], v[2]};
    }
    validate(m);
    return m;
  }
};

std::string stats_output(const TraceStats& s, const std::string& format) {
  if (format == "csv") {
    return fmt::format(
        "objects,total_bytes,max_in_use_bytes,avg_size,memory_ops,free_events,distinct_sizes,max_size,"
        "invalid_mallocs,invalid_frees\n{},{},{},{:.2f},{},{},{},{},{},{}\n",
        s.objects, s.total_bytes, s.max_in_use_bytes, s.avg_size(), s.memory_ops, s.free_events,
        s.distinct_sizes.size(), s.max_size, s.invalid_mallocs, s.invalid_frees);
  }
  nlohmann::ordered_json j;
  j["objects"] = s.objects;
  j["total_bytes"] = s.total_bytes;
  j["max_in_use_bytes"] = s.max_in_use_bytes;
  j["avg_size"] = std::stod(fmt::format("{:.2f}", s.avg_size()));
  j["memory_ops"] = s.memory_ops;
  j["free_events"] = s.free_events;
  j["distinct_sizes"] = std::vector<Bytes>(s.distinct_sizes.begin(), s.distinct_sizes.end());
  j["max_size"] = s.max_size;
  j["invalid_mallocs"] = s.invalid_mallocs;
  j["invalid_frees"] = s.invalid_frees;
  return j.dump(2) + "\n";
}

std::string metrics_csv(const SimulationResult& r) {
  const auto& m = r.metrics;
  std::string out =
      "time,accesses,hwm,energy,fitness,mallocs,frees,splits,coalesces,invalid_mallocs,invalid_frees,"
      "internal_frag,external_frag_events,external_frag_wasted\n";
  out += fmt::format("{},{},{},{:.6f},{},{},{},{},{},{},{},{},{},{}\n", m.time_units, m.mem_accesses, m.hwm_bytes,
                     r.energy, r.fitness ? fmt::format("{:.6f}", *r.fitness) : std::string{}, m.malloc_count,
                     m.free_count, m.split_count, m.coalesce_count, m.invalid_mallocs, m.invalid_frees,
                     m.internal_frag_bytes, m.external_frag_events, m.external_frag_wasted_bytes);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator and search for composed dynamic memory managers"};
  app.require_subcommand(1);

  Common common;
  std::string trace_path, spec_path, output_path, dmm_name, baseline_name = "kng", dmms = "kng,lea,fib,s10,exa";
  std::string plot_path, history_path, best_path, compare_format = "csv", search_format = "table";
  std::uint64_t seed = 0;
  bool parallel = false;
  GEParams ge;

  auto* stats = app.add_subcommand("stats", "Summarize a trace");
  stats->add_option("trace", trace_path, "Trace file")->required();
  stats->add_option("--format", common.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace from a generator spec");
  gen->add_option("spec", spec_path, "Generator spec (JSON)")->required();
  gen->add_option("-o,--output", output_path, "Output trace file")->required();
  auto* gen_seed = gen->add_option("--seed", seed, "Override the spec's seed");

  auto* sim = app.add_subcommand("sim", "Replay a trace through one DMM");
  sim->add_option("trace", trace_path, "Trace file")->required();
  sim->add_option("--dmm", dmm_name, "Preset (kng|lea|fib|s10|exa) or DMM config file")->required();
  auto* sim_baseline = sim->add_option("--baseline", baseline_name, "Baseline DMM for the fitness value");
  sim->add_option("--format", common.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  sim->add_option("--weights", common.weights, "Fitness weights time,memory,energy");
  sim->add_option("--energy-model", common.energy_model, "Energy per access,time unit,hwm byte");

  auto* cmp = app.add_subcommand("compare", "Replay a trace through several DMMs, normalized to a baseline");
  cmp->add_option("trace", trace_path, "Trace file")->required();
  cmp->add_option("--dmms", dmms, "Comma-separated presets or config files");
  cmp->add_option("--baseline", baseline_name, "Baseline DMM name");
  cmp->add_option("--format", compare_format, "csv|json")->check(CLI::IsMember({"json", "csv"}));
  cmp->add_option("--weights", common.weights, "Fitness weights time,memory,energy");
  cmp->add_option("--energy-model", common.energy_model, "Energy per access,time unit,hwm byte");
  cmp->add_option("--plot", plot_path, "Also write long-format ratio CSV for plotting");
  cmp->add_flag("--parallel", parallel, "Run candidates concurrently");

  auto* search = app.add_subcommand("search", "Grammatical-evolution search for a custom DMM");
  search->add_option("trace", trace_path, "Trace file")->required();
  search->add_option("--baseline", baseline_name, "Baseline DMM (preset or config)");
  search->add_option("--population", ge.population_size, "Population size");
  search->add_option("--generations", ge.generations, "Generations");
  search->add_option("--crossover", ge.crossover_rate, "Crossover rate");
  search->add_option("--mutation", ge.mutation_rate, "Per-codon mutation rate");
  search->add_option("--tournament", ge.tournament_size, "Tournament size");
  search->add_option("--elite", ge.elite_count, "Elite count");
  search->add_option("--wraps", ge.max_wraps, "Maximum genome wraps");
  search->add_option("--genome-length", ge.genome_length, "Codons per genome");
  search->add_option("--seed", ge.seed, "Random seed");
  search->add_option("--weights", common.weights, "Fitness weights time,memory,energy");
  search->add_option("--energy-model", common.energy_model, "Energy per access,time unit,hwm byte");
  search->add_option("--out", best_path, "Write the best DMM config here");
  search->add_option("--history", history_path, "Write per-generation best fitness CSV here");
  search->add_option("--format", search_format, "table|json")->check(CLI::IsMember({"json", "table"}));

  auto* show = app.add_subcommand("show", "Print a DMM config as a free-list map");
  show->add_option("dmm", dmm_name, "Config file or preset")->required();
  show->add_option("--trace", trace_path, "Trace used to size presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    std::cerr << app.help();
    return code;
  }

  try {
    if (*stats) {
      std::cout << stats_output(trace_stats(load_trace(trace_path)), common.format);
    } else if (*gen) {
      auto spec = generator_spec_from_json(nlohmann::json::parse(read_file(spec_path)));
      if (*gen_seed) spec.seed = seed;
      std::ofstream out(output_path, std::ios::binary);
      if (!out) throw Error(fmt::format("cannot write '{}'", output_path));
      emit_trace(generate_trace(spec), out);
    } else if (*sim) {
      const Trace trace = load_trace(trace_path);
      const TraceStats st = trace_stats(trace);
      const auto w = common.fitness_weights();
      const auto model = common.energy();
      std::optional<Metrics> baseline;
      if (*sim_baseline) baseline = simulate(trace, resolve_dmm(baseline_name, st), model).metrics;
      const auto result = simulate(trace, resolve_dmm(dmm_name, st), model, w, baseline);
      std::cout << (common.format == "csv" ? metrics_csv(result) : to_json(result).dump(2) + "\n");
    } else if (*cmp) {
      const Trace trace = load_trace(trace_path);
      const TraceStats st = trace_stats(trace);
      std::vector<NamedSpec> specs;
      std::stringstream ss(dmms);
      std::string name;
      while (std::getline(ss, name, ',')) specs.emplace_back(name, resolve_dmm(name, st));
      const auto report = compare(trace, specs, baseline_name, common.energy(), common.fitness_weights(), parallel);
      std::cout << (compare_format == "json" ? to_json(report).dump(2) + "\n" : report_csv(report));
      if (!plot_path.empty()) write_file(plot_path, report_plot_csv(report));
    } else if (*search) {
      const Trace trace = load_trace(trace_path);
      const TraceStats st = trace_stats(trace);
      const auto w = common.fitness_weights();
      const auto model = common.energy();
      const Metrics baseline = simulate(trace, resolve_dmm(baseline_name, st), model).metrics;
      const auto result = evolve(trace, ge, Grammar::for_trace(st), baseline, w, model);
      if (!result.best) throw Error("search found no valid DMM");
      if (!best_path.empty()) write_file(best_path, emit_dmm_spec(*result.best));
      if (!history_path.empty()) write_file(history_path, history_csv(result.history));
      if (search_format == "json") {
        nlohmann::ordered_json j;
        j["best_fitness"] = result.best_fitness;
        j["evaluations"] = result.evaluations;
        j["best"] = to_json(*result.best);
        j["history"] = result.history;
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << dmm_table(*result.best);
        std::cout << fmt::format("best fitness {:.6f} (baseline {} = 1), {} distinct candidates simulated\n",
                                 result.best_fitness, baseline_name, result.evaluations);
      }
    } else if (*show) {
      TraceStats st;
      st.max_size = 4096;
      st.distinct_sizes = {4096};
      if (!trace_path.empty()) st = trace_stats(load_trace(trace_path));
      std::cout << dmm_table(resolve_dmm(dmm_name, st));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
