#pragma once

#include <string>
#include <vector>

#include "cascade/core/config.h"
#include "cascade/metrics/fps.h"
#include "cascade/scheduler/engine.h"

namespace cascade::executor {

struct SpeedupRow {
  int workers = 1;
  int iterations = 0;
  double modeled_time = 0.0;
  double modeled_speedup = 0.0;
  double wall_seconds = 0.0;
  double wall_speedup = 0.0;
};

struct SpeedupReport {
  int blocks = 0;
  int baseline_iterations = 0;  // sequential rollout: offset = passes, one worker
  double baseline_modeled = 0.0;
  double baseline_wall = 0.0;
  std::vector<SpeedupRow> rows;
};

// Modeled time until the last block is viewable.
double modeled_makespan(const metrics::Trace& trace);

// Runs the sequential baseline once and the configured cascade once per
// worker count. Throws InvalidInput when blocks < passes and
// ContractViolation if a run with nonzero comm or decode cost is not
// sub-linear in the worker count.
SpeedupReport speedup_report(core::CascadeConfig config, int blocks, const std::vector<int>& worker_counts,
                             scheduler::Seeds seeds = {});

std::string speedup_csv(const SpeedupReport& report);

struct AblationRow {
  int offset = 1;
  core::AttentionMode mode = core::AttentionMode::bidirectional;
  int workers = 1;
  int iterations = 0;
  double modeled_time = 0.0;
  double streaming_fps = 0.0;
  metrics::FpsSeries fps;
};

// Every offset 1..P x {causal, bidirectional} x worker_counts, in that
// nesting order.
std::vector<AblationRow> ablation_grid(const core::CascadeConfig& config, const std::vector<int>& worker_counts,
                                       scheduler::Seeds seeds = {});

std::string ablation_csv(const std::vector<AblationRow>& rows);

// Plain cascade run whose emission times follow the config's
// decode_overlap flag; the flag requires at least two workers.
metrics::Trace run_with_overlap(const core::CascadeConfig& config, std::string_view prompt, scheduler::Seeds seeds);

}  // namespace cascade::executor
