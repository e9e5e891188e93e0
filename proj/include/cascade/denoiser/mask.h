#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cascade/core/types.h"

namespace cascade::denoiser {

struct MaskBlock {
  int block_index = 0;
  double noise_level = 0.0;
};

// Frame-level visibility. Columns are the pool blocks followed by the batch
// blocks, each in ascending block order; rows are the batch blocks' frames.
class AttentionMask {
 public:
  AttentionMask(int frames_per_block, std::vector<int> query_blocks, std::vector<int> key_blocks);

  int frames_per_block() const { return frames_per_block_; }
  const std::vector<int>& query_blocks() const { return query_blocks_; }
  const std::vector<int>& key_blocks() const { return key_blocks_; }
  std::size_t rows() const { return query_blocks_.size() * static_cast<std::size_t>(frames_per_block_); }
  std::size_t cols() const { return key_blocks_.size() * static_cast<std::size_t>(frames_per_block_); }

  bool visible(std::size_t query_frame, std::size_t key_frame) const { return bits_[query_frame * cols() + key_frame] != 0; }
  void set(std::size_t query_frame, std::size_t key_frame, bool on) { bits_[query_frame * cols() + key_frame] = on ? 1 : 0; }

  // Block-level view: does batch slot q see key column block k?
  bool block_visible(std::size_t q, std::size_t k) const;
  // Number of key frames visible to any query frame of batch slot q.
  int visible_key_frames(std::size_t q) const;

 private:
  int frames_per_block_;
  std::vector<int> query_blocks_;
  std::vector<int> key_blocks_;
  std::vector<std::uint8_t> bits_;
};

// Causal: block b sees pool and batch blocks <= b. Bidirectional: every
// batch block sees every pool and batch block. Throws ContractViolation on an
// empty batch or when pool and batch overlap.
AttentionMask build_mask(std::span<const MaskBlock> batch, std::span<const int> pool_blocks, core::AttentionMode mode,
                         int frames_per_block);

}  // namespace cascade::denoiser
