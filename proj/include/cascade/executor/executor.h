#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cascade/core/config.h"
#include "cascade/core/errors.h"
#include "cascade/core/types.h"
#include "cascade/denoiser/forward.h"
#include "cascade/executor/worker_pool.h"

namespace cascade::executor {

class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(core::CostParams params) : params_(params) {}

  const core::CostParams& params() const { return params_; }
  double pass_cost(int visible_frames) const { return params_.pass_base + params_.pass_per_frame * visible_frames; }
  double comm_cost(int kv_frames) const {
    return kv_frames > 0 ? params_.comm_base + params_.comm_per_frame * kv_frames : 0.0;
  }
  double decode_cost() const { return params_.decode; }

 private:
  core::CostParams params_;
};

struct EntryTiming {
  int worker = 0;
  int visible_frames = 0;
  double modeled_cost = 0.0;
};

struct ExecutionResult {
  std::vector<denoiser::ForwardOutput> outputs;  // plan order
  std::vector<EntryTiming> timing;               // plan order
  double modeled_compute = 0.0;  // max over workers of their summed pass costs
  double modeled_comm = 0.0;
  int kv_frames_exchanged = 0;
  double wall_seconds = 0.0;
};

class ExecutionError : public core::Error {
 public:
  ExecutionError(int block_index, const std::string& what)
      : core::Error("worker failed on block " + std::to_string(block_index) + ": " + what), block_index_(block_index) {}
  int block_index() const { return block_index_; }

 private:
  int block_index_;
};

// Runs one BatchPlan across G workers. Entry i goes to worker i % G; each
// stage of the batched forward is a fork-join round, and the barrier between
// the KV projection and attention stages is where fresh KV of the whole
// batch becomes visible to every worker.
class Executor {
 public:
  Executor(int workers, CostModel cost);

  int workers() const { return workers_; }
  const CostModel& cost() const { return cost_; }

  static int worker_for(std::size_t entry, int workers) { return static_cast<int>(entry % static_cast<std::size_t>(workers)); }

  ExecutionResult execute(const core::BatchPlan& plan, std::span<const denoiser::BatchInput> inputs,
                          std::span<const denoiser::KVRef> pool_snapshot, const denoiser::ModelWeights& weights,
                          core::AttentionMode mode) const;

 private:
  int workers_;
  CostModel cost_;
  std::unique_ptr<WorkerPool> pool_;
};

// Latent -> pixel stand-in: each latent frame becomes video_frames_per_latent
// pixel vectors via fixed linear maps whose stack has full column rank.
class Decoder {
 public:
  Decoder(int latent_dim, int pixel_dim, int video_frames_per_latent);

  int video_frames_per_latent() const { return frames_per_latent_; }
  const std::vector<core::Matrix>& maps() const { return maps_; }

  // (S x D) -> (S * video_frames_per_latent x pixel_dim)
  core::Matrix decode(const core::Matrix& latents) const;

 private:
  int latent_dim_;
  int pixel_dim_;
  int frames_per_latent_;
  std::vector<core::Matrix> maps_;  // each D x pixel_dim
};

core::Matrix decode_block(const core::Matrix& latents, const core::CascadeConfig& config);

}  // namespace cascade::executor
