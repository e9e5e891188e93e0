#pragma once

#include <filesystem>
#include <vector>

#include "cascade/metrics/trace.h"

namespace cascade::metrics {

struct FpsPoint {
  int block = 0;
  int video_frames = 0;
  double elapsed = 0.0;  // since the previous emission (or session start)
  double fps = 0.0;

  bool operator==(const FpsPoint&) const = default;
};

using FpsSeries = std::vector<FpsPoint>;

enum class Clock { modeled, wall };

FpsSeries instantaneous_fps(const Trace& trace, Clock clock = Clock::modeled);

// Mean instantaneous FPS of the 8th and 9th emitted blocks (1-indexed).
double streaming_fps(const FpsSeries& series);
double streaming_fps(const Trace& trace, Clock clock = Clock::modeled);

inline constexpr int kStreamingFpsMinBlocks = 9;

// Header "block,video_frames,elapsed,fps", one row per emitted block.
void write_fps_csv(const FpsSeries& series, const std::filesystem::path& path);

struct AttentionCost {
  long long total_pairs = 0;       // sum over passes of query frames x visible key frames
  int max_keys_per_query = 0;
  int max_allowed_keys = 0;        // (W + sink + cascade width) * S
};

// Throws ContractViolation if any pass saw more keys than the window bound.
AttentionCost attention_cost(const Trace& trace, const core::CascadeConfig& config);

}  // namespace cascade::metrics
