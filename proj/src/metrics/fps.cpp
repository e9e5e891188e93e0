#include "cascade/metrics/fps.h"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include "cascade/core/errors.h"

namespace cascade::metrics {

FpsSeries instantaneous_fps(const Trace& trace, Clock clock) {
  FpsSeries series;
  double previous = 0.0;
  for (const auto& e : trace.events) {
    if (!e.emitted) continue;
    const double at = clock == Clock::modeled ? e.emitted->emit_time : e.emitted->wall_emit_time;
    const double elapsed = at - previous;
    if (!(elapsed > 0.0)) {
      throw core::NumericError("non-positive interval before block " + std::to_string(e.emitted->block));
    }
    series.push_back(FpsPoint{e.emitted->block, e.emitted->video_frames, elapsed, e.emitted->video_frames / elapsed});
    previous = at;
  }
  if (series.empty()) throw core::InvalidInput("instantaneous_fps: trace has no emitted blocks");
  return series;
}

double streaming_fps(const FpsSeries& series) {
  if (static_cast<int>(series.size()) < kStreamingFpsMinBlocks) {
    throw core::InvalidInput("streaming_fps needs at least 9 emitted blocks (uses the 8th and 9th), got " +
                             std::to_string(series.size()));
  }
  return (series[7].fps + series[8].fps) / 2.0;
}

void write_fps_csv(const FpsSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw core::InvalidInput("cannot write " + path.string());
  out << "block,video_frames,elapsed,fps\n" << std::setprecision(17);
  for (const auto& p : series) out << p.block << ',' << p.video_frames << ',' << p.elapsed << ',' << p.fps << '\n';
  if (!out) throw core::InvalidInput("failed writing " + path.string());
}

double streaming_fps(const Trace& trace, Clock clock) { return streaming_fps(instantaneous_fps(trace, clock)); }

AttentionCost attention_cost(const Trace& trace, const core::CascadeConfig& config) {
  AttentionCost cost;
  cost.max_allowed_keys = (config.W + config.sink_blocks + config.cascade_width()) * config.S;
  for (const auto& e : trace.events) {
    for (const auto& x : e.entries) {
      if (x.visible_frames > cost.max_allowed_keys) {
        throw core::ContractViolation("block " + std::to_string(x.block) + " saw " + std::to_string(x.visible_frames) +
                                      " key frames, bound is " + std::to_string(cost.max_allowed_keys));
      }
      cost.max_keys_per_query = std::max(cost.max_keys_per_query, x.visible_frames);
      cost.total_pairs += static_cast<long long>(config.S) * x.visible_frames;
    }
  }
  return cost;
}

}  // namespace cascade::metrics
