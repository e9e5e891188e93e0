#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cascade/core/conditioning.h"
#include "cascade/denoiser/model.h"

namespace cascade::kvpool {

using denoiser::KVRef;

struct PoolTag {
  int block_index = 0;
  double noise_tag = 0.0;
  std::string conditioning_id;
  bool sink = false;

  bool operator==(const PoolTag&) const = default;
};

// Global shared KV store: the latest KV per block, at most `window`
// non-sink blocks, oldest block index evicted first. Block 0 becomes a
// permanent sink when sink_blocks == 1.
class KVPool {
 public:
  KVPool(int window, int sink_blocks, int layers);

  int window() const { return window_; }
  int sink_blocks() const { return sink_blocks_; }
  int layers() const { return layers_; }

  // Stores or overwrites; returns the evicted block index, if any.
  std::optional<int> insert(KVRef kv);

  // Entries with block_index < querying_block, ascending.
  std::vector<KVRef> visible_set(int querying_block) const;
  std::vector<KVRef> entries() const;

  KVRef find(int block_index) const;
  bool contains(int block_index) const { return entries_.count(block_index) != 0; }
  std::vector<int> blocks() const;
  const std::set<int>& sink_set() const { return sinks_; }
  int block_count() const { return static_cast<int>(entries_.size()); }
  int non_sink_count() const { return block_count() - static_cast<int>(sinks_.size()); }
  int pool_frame_count() const;
  std::vector<PoolTag> dump() const;

 private:
  int window_;
  int sink_blocks_;
  int layers_;
  std::map<int, KVRef> entries_;
  std::set<int> sinks_;
};

inline int pool_frame_count(const KVPool& pool) { return pool.pool_frame_count(); }

struct RecacheReport {
  int passes = 0;
  std::vector<int> visible_frames;  // per recache forward, ascending block order
};

// Replaces the KV of every pool block (or only `only_blocks` when given) by
// a fresh forward of the block's clean latents at noise level 0 under
// `conditioning`. Blocks are recomputed in ascending order, each attending to
// the already-recomputed entries before it. Throws ContractViolation when a
// block's latents are missing.
RecacheReport recache(KVPool& pool, const core::Conditioning& conditioning, const denoiser::ModelWeights& weights,
                      const std::map<int, core::Matrix>& clean_latents,
                      const std::optional<std::set<int>>& only_blocks = std::nullopt);

}  // namespace cascade::kvpool
