#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cascade/core/config.h"
#include "cascade/core/noise.h"
#include "cascade/core/types.h"
#include "cascade/denoiser/forward.h"
#include "cascade/kvpool/pool.h"

namespace cascade::scheduler {

enum class Phase { fill, steady, drain, done };
const char* to_string(Phase phase);

// Block j runs pass p at iteration j * offset + p. In-flight blocks are the
// contiguous range [lead, next_block); a newer block always has exactly
// `offset` fewer completed passes than its predecessor.
struct CascadeState {
  int total_blocks = 0;
  int offset = 1;
  int passes = 0;
  int next_block = 0;       // next block to admit
  int youngest_passes = 0;  // passes done by block next_block - 1, even if retired
  int retired = 0;          // blocks that finished their cache pass
  int iteration = 0;
  std::string conditioning_id;
  std::vector<core::Block> in_flight;  // ascending block index

  int lead() const { return retired; }
  int depth() const { return static_cast<int>(in_flight.size()) - 1; }
  Phase phase() const;
};

CascadeState initial_state(const core::CascadeConfig& config, const core::NoiseStream& noise,
                           const std::string& conditioning_id);

// One entry per in-flight block, newest block noisiest. Throws
// ContractViolation once the state is done.
core::BatchPlan plan_iteration(const CascadeState& state, const core::CascadeConfig& config);

struct ApplyOutcome {
  std::vector<std::pair<int, core::Matrix>> emitted;  // t0 x0-predictions
  std::vector<int> retired;                           // blocks whose cache KV entered the pool
};

// Renoise after denoise passes, emit after the last denoise pass, insert
// the cache-pass KV into the pool and retire the block, then admit the next
// block when its predecessor has done `offset` passes. Pool inserts happen
// after every entry is processed.
ApplyOutcome apply_results(CascadeState& state, const core::BatchPlan& plan,
                           std::span<const denoiser::ForwardOutput> results, const core::NoiseStream& noise,
                           kvpool::KVPool& pool, const core::TimestepSchedule& schedule);

}  // namespace cascade::scheduler
