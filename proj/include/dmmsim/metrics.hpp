#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dmmsim/types.hpp"

namespace dmmsim {

// Counters accumulated over one replay.
struct Metrics {
  std::uint64_t time_units = 0;
  std::uint64_t mem_accesses = 0;
  std::uint64_t malloc_count = 0;
  std::uint64_t free_count = 0;
  std::uint64_t split_count = 0;
  std::uint64_t coalesce_count = 0;
  std::uint64_t invalid_mallocs = 0;
  std::uint64_t invalid_frees = 0;
  Bytes hwm_bytes = 0;
  Bytes internal_frag_bytes = 0;  // peak over the live set
  std::uint64_t external_frag_events = 0;
  Bytes external_frag_wasted_bytes = 0;
  Bytes peak_requested_bytes = 0;
  std::uint64_t farthest_fallbacks = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Merge for parallel runners: counters add, peaks take the max.
inline Metrics merge(const Metrics& a, const Metrics& b) {
  Metrics m;
  m.time_units = a.time_units + b.time_units;
  m.mem_accesses = a.mem_accesses + b.mem_accesses;
  m.malloc_count = a.malloc_count + b.malloc_count;
  m.free_count = a.free_count + b.free_count;
  m.split_count = a.split_count + b.split_count;
  m.coalesce_count = a.coalesce_count + b.coalesce_count;
  m.invalid_mallocs = a.invalid_mallocs + b.invalid_mallocs;
  m.invalid_frees = a.invalid_frees + b.invalid_frees;
  m.hwm_bytes = std::max(a.hwm_bytes, b.hwm_bytes);
  m.internal_frag_bytes = std::max(a.internal_frag_bytes, b.internal_frag_bytes);
  m.external_frag_events = a.external_frag_events + b.external_frag_events;
  m.external_frag_wasted_bytes = a.external_frag_wasted_bytes + b.external_frag_wasted_bytes;
  m.peak_requested_bytes = std::max(a.peak_requested_bytes, b.peak_requested_bytes);
  m.farthest_fallbacks = a.farthest_fallbacks + b.farthest_fallbacks;
  return m;
}

// Linear energy model over the three inputs the estimate depends on.
struct EnergyModel {
  double per_access = 1.0;
  double per_time_unit = 0.5;
  double per_hwm_byte = 1e-4;
};

struct FitnessWeights {
  double time = 1.0 / 3.0;
  double memory = 1.0 / 3.0;
  double energy = 1.0 / 3.0;
};

inline void validate(const EnergyModel& m) {
  if (m.per_access < 0 || m.per_time_unit < 0 || m.per_hwm_byte < 0)
    throw ConfigError("energy coefficients must be nonnegative");
}

inline void validate(const FitnessWeights& w) {
  if (w.time < 0 || w.memory < 0 || w.energy < 0) throw ConfigError("fitness weights must be nonnegative");
  if (std::abs(w.time + w.memory + w.energy - 1.0) > 1e-9) throw ConfigError("fitness weights must sum to 1");
}

inline double energy(const Metrics& m, const EnergyModel& model) {
  return model.per_access * static_cast<double>(m.mem_accesses) +
         model.per_time_unit * static_cast<double>(m.time_units) +
         model.per_hwm_byte * static_cast<double>(m.hwm_bytes);
}

// Weighted sum of baseline-normalized time, memory and energy. Lower is better;
// the baseline itself scores 1.
inline double fitness(const Metrics& m, const Metrics& baseline, const FitnessWeights& w, const EnergyModel& model) {
  const double base_e = energy(baseline, model);
  if (baseline.time_units == 0 || baseline.hwm_bytes == 0 || !(base_e > 0.0)) {
    throw Error("baseline metrics must be strictly positive in time, memory and energy");
  }
  return w.time * (static_cast<double>(m.time_units) / static_cast<double>(baseline.time_units)) +
         w.memory * (static_cast<double>(m.hwm_bytes) / static_cast<double>(baseline.hwm_bytes)) +
         w.energy * (energy(m, model) / base_e);
}

// (1 - candidate/baseline) * 100: positive when the candidate uses less.
inline double improvement_percent(double candidate, double baseline) { return (1.0 - candidate / baseline) * 100.0; }

// baseline / candidate, so values above 1 favour the candidate.
inline double ratio(double baseline, double candidate) {
  if (candidate == 0.0) return std::numeric_limits<double>::infinity();
  return baseline / candidate;
}

struct Ratios {
  double time = 1.0;
  double accesses = 1.0;
  double memory = 1.0;
  double energy = 1.0;
  double fitness = 1.0;  // 1 / F

  bool any_infinite() const {
    return std::isinf(time) || std::isinf(accesses) || std::isinf(memory) || std::isinf(energy) || std::isinf(fitness);
  }
};

struct ReportRow {
  std::string name;
  std::optional<Metrics> metrics;  // empty when the replay aborted
  double energy = 0.0;
  double fitness = 0.0;
  Ratios ratios;
  std::string error;
};

struct Report {
  std::string baseline;
  std::vector<ReportRow> rows;
};

inline Report normalized_report(const std::string& baseline_name, const Metrics& baseline,
                                const std::vector<std::pair<std::string, std::optional<Metrics>>>& candidates,
                                const EnergyModel& model, const FitnessWeights& w,
                                const std::vector<std::string>& errors = {}) {
  Report report{baseline_name, {}};
  const double base_e = energy(baseline, model);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& [name, m] = candidates[i];
    ReportRow row;
    row.name = name;
    row.metrics = m;
    if (i < errors.size()) row.error = errors[i];
    if (m) {
      row.energy = energy(*m, model);
      row.fitness = fitness(*m, baseline, w, model);
      row.ratios.time = ratio(static_cast<double>(baseline.time_units), static_cast<double>(m->time_units));
      row.ratios.accesses = ratio(static_cast<double>(baseline.mem_accesses), static_cast<double>(m->mem_accesses));
      row.ratios.memory = ratio(static_cast<double>(baseline.hwm_bytes), static_cast<double>(m->hwm_bytes));
      row.ratios.energy = ratio(base_e, row.energy);
      row.ratios.fitness = ratio(1.0, row.fitness);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace detail {
inline std::string num(double v) {
  if (std::isinf(v)) return "inf";
  return fmt::format("{:.6f}", v);
}
}  // namespace detail

inline constexpr const char* kReportCsvHeader =
    "name,time,accesses,hwm,energy,fitness,time_ratio,accesses_ratio,hwm_ratio,energy_ratio,fitness_ratio,status";

inline std::string report_csv(const Report& report) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& r : report.rows) {
    if (!r.metrics) {
      out += fmt::format("{},,,,,,,,,,,\"error: {}\"\n", r.name, r.error);
      continue;
    }
    const auto& m = *r.metrics;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.name, m.time_units, m.mem_accesses, m.hwm_bytes,
                       detail::num(r.energy), detail::num(r.fitness), detail::num(r.ratios.time),
                       detail::num(r.ratios.accesses), detail::num(r.ratios.memory), detail::num(r.ratios.energy),
                       detail::num(r.ratios.fitness), r.ratios.any_infinite() ? "inf" : "ok");
  }
  return out;
}

// Long format for plotting normalized bars: one row per (dmm, metric).
inline std::string report_plot_csv(const Report& report) {
  std::string out = "dmm,metric,ratio\n";
  for (const auto& r : report.rows) {
    if (!r.metrics) continue;
    out += fmt::format("{},fitness,{}\n", r.name, detail::num(r.ratios.fitness));
    out += fmt::format("{},time,{}\n", r.name, detail::num(r.ratios.time));
    out += fmt::format("{},memory,{}\n", r.name, detail::num(r.ratios.memory));
    out += fmt::format("{},energy,{}\n", r.name, detail::num(r.ratios.energy));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["time_units"] = m.time_units;
  j["mem_accesses"] = m.mem_accesses;
  j["malloc_count"] = m.malloc_count;
  j["free_count"] = m.free_count;
  j["split_count"] = m.split_count;
  j["coalesce_count"] = m.coalesce_count;
  j["invalid_mallocs"] = m.invalid_mallocs;
  j["invalid_frees"] = m.invalid_frees;
  j["hwm_bytes"] = m.hwm_bytes;
  j["internal_frag_bytes"] = m.internal_frag_bytes;
  j["external_frag_events"] = m.external_frag_events;
  j["external_frag_wasted_bytes"] = m.external_frag_wasted_bytes;
  j["peak_requested_bytes"] = m.peak_requested_bytes;
  j["farthest_fallbacks"] = m.farthest_fallbacks;
  return j;
}

inline nlohmann::ordered_json json_number(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline nlohmann::ordered_json to_json(const Report& report) {
  nlohmann::ordered_json j;
  j["baseline"] = report.baseline;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    if (r.metrics) {
      row["metrics"] = to_json(*r.metrics);
      row["energy"] = r.energy;
      row["fitness"] = r.fitness;
      row["ratios"] = {{"time", json_number(r.ratios.time)},
                       {"accesses", json_number(r.ratios.accesses)},
                       {"memory", json_number(r.ratios.memory)},
                       {"energy", json_number(r.ratios.energy)},
                       {"fitness", json_number(r.ratios.fitness)}};
      row["infinite_ratio"] = r.ratios.any_infinite();
    } else {
      row["error"] = r.error;
    }
    j["rows"].push_back(std::move(row));
  }
  return j;
}

}  // namespace dmmsim
