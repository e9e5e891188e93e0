#include "cascade/kvpool/pool.h"

#include "cascade/core/errors.h"
#include "cascade/denoiser/forward.h"

namespace cascade::kvpool {

KVPool::KVPool(int window, int sink_blocks, int layers) : window_(window), sink_blocks_(sink_blocks), layers_(layers) {
  if (window < 1) throw core::InvalidInput("pool window must be >= 1");
  if (sink_blocks != 0 && sink_blocks != 1) throw core::InvalidInput("sink_blocks must be 0 or 1");
  if (layers < 1) throw core::InvalidInput("pool layers must be >= 1");
}

std::optional<int> KVPool::insert(KVRef kv) {
  if (!kv) throw core::ContractViolation("pool insert: null KV");
  if (static_cast<int>(kv->layers.size()) != layers_) {
    throw core::ContractViolation("pool insert: expected " + std::to_string(layers_) + " layers, got " +
                                  std::to_string(kv->layers.size()));
  }
  const int block = kv->block_index;
  entries_[block] = std::move(kv);
  if (sink_blocks_ == 1 && block == 0) sinks_.insert(0);

  std::optional<int> evicted;
  while (non_sink_count() > window_) {
    auto it = entries_.begin();
    while (sinks_.count(it->first) != 0) ++it;
    evicted = it->first;
    entries_.erase(it);
  }
  return evicted;
}

std::vector<KVRef> KVPool::visible_set(int querying_block) const {
  std::vector<KVRef> out;
  for (auto it = entries_.begin(); it != entries_.end() && it->first < querying_block; ++it) out.push_back(it->second);
  return out;
}

std::vector<KVRef> KVPool::entries() const {
  std::vector<KVRef> out;
  for (const auto& [_, kv] : entries_) out.push_back(kv);
  return out;
}

KVRef KVPool::find(int block_index) const {
  auto it = entries_.find(block_index);
  return it == entries_.end() ? nullptr : it->second;
}

std::vector<int> KVPool::blocks() const {
  std::vector<int> out;
  for (const auto& [b, _] : entries_) out.push_back(b);
  return out;
}

int KVPool::pool_frame_count() const {
  int n = 0;
  for (const auto& [_, kv] : entries_) n += kv->frames();
  return n;
}

std::vector<PoolTag> KVPool::dump() const {
  std::vector<PoolTag> out;
  for (const auto& [b, kv] : entries_) out.push_back(PoolTag{b, kv->noise_tag, kv->conditioning_id, sinks_.count(b) != 0});
  return out;
}

RecacheReport recache(KVPool& pool, const core::Conditioning& conditioning, const denoiser::ModelWeights& weights,
                      const std::map<int, core::Matrix>& clean_latents, const std::optional<std::set<int>>& only_blocks) {
  std::vector<int> targets;
  for (int b : pool.blocks()) {
    if (only_blocks && only_blocks->count(b) == 0) continue;
    if (clean_latents.count(b) == 0) {
      throw core::ContractViolation("recache: no clean latents for pool block " + std::to_string(b));
    }
    targets.push_back(b);
  }

  RecacheReport report;
  for (int b : targets) {
    // Predecessors already recomputed in this call (or untouched ones when
    // only a subset is refreshed).
    std::vector<KVRef> visible = pool.visible_set(b);
    std::vector<int> pool_blocks;
    for (const auto& kv : visible) pool_blocks.push_back(kv->block_index);

    const core::Matrix& latents = clean_latents.at(b);
    const denoiser::MaskBlock query{b, 0.0};
    auto mask = denoiser::build_mask(std::span(&query, 1), pool_blocks, core::AttentionMode::causal,
                                     static_cast<int>(latents.rows()));
    const denoiser::BatchInput input{b, latents, 0.0, &conditioning};
    auto out = denoiser::forward(weights, std::span(&input, 1), visible, mask);
    report.visible_frames.push_back(out.front().visible_frames);
    pool.insert(std::make_shared<const denoiser::BlockKV>(std::move(out.front().kv)));
    ++report.passes;
  }
  return report;
}

}  // namespace cascade::kvpool
