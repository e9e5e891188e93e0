#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cascade/core/conditioning.h"
#include "cascade/core/config.h"
#include "cascade/core/noise.h"
#include "cascade/executor/executor.h"
#include "cascade/kvpool/pool.h"
#include "cascade/metrics/trace.h"
#include "cascade/scheduler/cascade_state.h"

namespace cascade::scheduler {

struct Seeds {
  std::uint64_t noise = 0;
  std::uint64_t weights = 0;
};

// Drives plan -> execute -> apply one iteration at a time and records the
// trace. Between steps the engine sits at an iteration boundary, where the
// conditioning may be replaced and modeled stalls queued for the next step.
class CascadeEngine {
 public:
  CascadeEngine(core::CascadeConfig config, std::string_view prompt, Seeds seeds);

  bool done() const { return state_.phase() == Phase::done; }
  const metrics::TraceEvent& step();

  const core::CascadeConfig& config() const { return config_; }
  const core::TimestepSchedule& schedule() const { return schedule_; }
  const core::NoiseStream& noise() const { return noise_; }
  const denoiser::ModelWeights& weights() const { return weights_; }
  const executor::Executor& executor() const { return executor_; }
  const CascadeState& state() const { return state_; }
  const kvpool::KVPool& pool() const { return pool_; }
  kvpool::KVPool& pool() { return pool_; }
  const core::Conditioning& conditioning() const { return conditioning_; }
  const std::map<int, core::Matrix>& outputs() const { return outputs_; }
  std::vector<core::Matrix> output_blocks() const;
  const metrics::Trace& trace() const { return trace_; }
  Seeds seeds() const { return seeds_; }

  // Boundary operations.
  void set_conditioning(core::Conditioning conditioning);
  void add_boundary_stall(double modeled_seconds, core::SwitchEvent event);

  // Resumable state: cascade indices, latents, pool KV, emitted outputs and
  // clocks. Restoring and finishing reproduces an uninterrupted run.
  nlohmann::json snapshot() const;
  static CascadeEngine restore(const nlohmann::json& doc);

 private:
  core::CascadeConfig config_;
  Seeds seeds_;
  core::TimestepSchedule schedule_;
  core::NoiseStream noise_;
  denoiser::ModelWeights weights_;
  executor::Executor executor_;
  core::Conditioning conditioning_;
  kvpool::KVPool pool_;
  CascadeState state_;
  std::map<int, core::Matrix> outputs_;
  metrics::Trace trace_;

  double clock_ = 0.0;
  double wall_clock_ = 0.0;
  double decode_free_ = 0.0;
  double pending_stall_ = 0.0;
  std::vector<core::SwitchEvent> pending_switches_;
};

struct RunResult {
  std::vector<core::Matrix> outputs;  // one S x D block per emitted block, in order
  metrics::Trace trace;
};

RunResult run_cascade(const core::CascadeConfig& config, std::string_view prompt, Seeds seeds);

// Plain block-by-block rollout: each block takes every pass before the next
// starts, attending only to pool KV of finished predecessors. Shares no code
// with the cascade state machine or the executor.
std::vector<core::Matrix> run_sequential_reference(const core::CascadeConfig& config, std::string_view prompt,
                                                   Seeds seeds);

}  // namespace cascade::scheduler
