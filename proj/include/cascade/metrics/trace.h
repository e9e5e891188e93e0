#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/core/config.h"
#include "cascade/core/matrix.h"
#include "cascade/core/types.h"
#include "cascade/kvpool/pool.h"

namespace cascade::metrics {

struct TraceEntry {
  int block = 0;
  int pass = 0;
  double noise_level = 0.0;
  int worker = 0;
  std::string conditioning_id;
  int visible_frames = 0;
  double modeled_cost = 0.0;

  bool operator==(const TraceEntry&) const = default;
};

struct Emission {
  int block = 0;
  int video_frames = 0;
  double emit_time = 0.0;  // modeled time at which the block is viewable
  double wall_emit_time = 0.0;
  core::Matrix latents;

  bool operator==(const Emission&) const = default;
};

// One record per cascade iteration.
struct TraceEvent {
  int iteration = 0;
  std::vector<TraceEntry> entries;
  double wall_time = 0.0;      // seconds spent in this iteration
  double modeled_time = 0.0;   // modeled duration incl. stall and serial decode
  double modeled_end = 0.0;    // cumulative modeled clock after this iteration
  double stall_time = 0.0;     // modeled recache stall before the passes
  double comm_time = 0.0;
  int pool_blocks = 0;
  int pool_frames = 0;
  std::vector<kvpool::PoolTag> pool;
  std::optional<Emission> emitted;
  std::vector<core::SwitchEvent> switch_events;

  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  std::vector<TraceEvent> events;

  std::size_t iterations() const { return events.size(); }
  bool operator==(const Trace&) const = default;
};

nlohmann::json to_json(const core::SwitchEvent& e);
core::SwitchEvent switch_event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TraceEvent& e);
TraceEvent trace_event_from_json(const nlohmann::json& j);

enum class TraceFormat { json_lines, csv };

// json-lines: one TraceEvent per line, lossless. csv: the FpsSeries columns.
void export_trace(const Trace& trace, const std::filesystem::path& path, TraceFormat format);
Trace import_trace(const std::filesystem::path& path);

}  // namespace cascade::metrics
