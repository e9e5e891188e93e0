#pragma once

#include <span>
#include <vector>

#include "cascade/core/conditioning.h"
#include "cascade/denoiser/mask.h"
#include "cascade/denoiser/model.h"

namespace cascade::denoiser {

struct BatchInput {
  int block_index = 0;
  Matrix latents;  // S x D
  double noise_level = 0.0;
  const core::Conditioning* conditioning = nullptr;
};

struct ForwardOutput {
  Matrix x0;      // S x D prediction of the clean latents
  BlockKV kv;     // tagged with the input noise level and conditioning
  int visible_frames = 0;
};

// One batched forward split into stages so the executor can run entries on
// different workers with a barrier between stages:
//
//   embed(e)                      for every entry
//   for each layer l:
//     project(l, e)               for every entry   -> barrier (KV exchange)
//     attend(l, e)                for every entry   -> barrier
//   finish(e)                     for every entry
//
// Each call touches only entry e's own state plus read-only shared inputs,
// so results do not depend on how entries are spread over threads.
class BatchForward {
 public:
  BatchForward(const ModelWeights& weights, std::span<const BatchInput> batch, std::span<const KVRef> visible_kv,
               const AttentionMask& mask);

  std::size_t entries() const { return slots_.size(); }
  int layers() const { return static_cast<int>(weights_.layers.size()); }

  void embed(std::size_t entry);
  void project(int layer, std::size_t entry);
  void attend(int layer, std::size_t entry);
  void finish(std::size_t entry);

  std::vector<ForwardOutput> take_outputs();

 private:
  struct Slot {
    Matrix hidden;
    std::vector<LayerKV> kv;
    Matrix queries;
    Matrix attended;
    ForwardOutput out;
  };

  const LayerKV& key_block(int layer, std::size_t column) const;

  const ModelWeights& weights_;
  std::span<const BatchInput> batch_;
  std::span<const KVRef> visible_;
  const AttentionMask& mask_;
  std::vector<Slot> slots_;
};

// Runs every stage in entry order on the calling thread.
std::vector<ForwardOutput> forward(const ModelWeights& weights, std::span<const BatchInput> batch,
                                   std::span<const KVRef> visible_kv, const AttentionMask& mask);

// (1 - s) * x0 + s * eps with s = level / 1000.
Matrix renoise(const Matrix& x0, const Matrix& eps, double level);

}  // namespace cascade::denoiser
