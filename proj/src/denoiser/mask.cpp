#include "cascade/denoiser/mask.h"

#include <algorithm>

#include "cascade/core/errors.h"

namespace cascade::denoiser {

AttentionMask::AttentionMask(int frames_per_block, std::vector<int> query_blocks, std::vector<int> key_blocks)
    : frames_per_block_(frames_per_block),
      query_blocks_(std::move(query_blocks)),
      key_blocks_(std::move(key_blocks)),
      bits_(rows() * cols(), 0) {}

bool AttentionMask::block_visible(std::size_t q, std::size_t k) const {
  const auto s = static_cast<std::size_t>(frames_per_block_);
  return visible(q * s, k * s);
}

int AttentionMask::visible_key_frames(std::size_t q) const {
  int n = 0;
  const auto row = q * static_cast<std::size_t>(frames_per_block_);
  for (std::size_t c = 0; c < cols(); ++c) n += visible(row, c) ? 1 : 0;
  return n;
}

AttentionMask build_mask(std::span<const MaskBlock> batch, std::span<const int> pool_blocks, core::AttentionMode mode,
                         int frames_per_block) {
  if (batch.empty()) throw core::ContractViolation("build_mask: empty batch");
  if (frames_per_block <= 0) throw core::ContractViolation("build_mask: frames_per_block must be positive");

  std::vector<int> queries;
  for (const auto& b : batch) queries.push_back(b.block_index);
  std::vector<int> pool(pool_blocks.begin(), pool_blocks.end());
  std::sort(queries.begin(), queries.end());
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(queries.begin(), queries.end()) != queries.end()) {
    throw core::ContractViolation("build_mask: duplicate batch block");
  }
  for (int p : pool) {
    if (std::binary_search(queries.begin(), queries.end(), p)) {
      throw core::ContractViolation("build_mask: block " + std::to_string(p) + " is in both pool and batch");
    }
  }

  std::vector<int> keys = pool;
  keys.insert(keys.end(), queries.begin(), queries.end());
  AttentionMask mask(frames_per_block, queries, keys);

  const auto s = static_cast<std::size_t>(frames_per_block);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      bool on = false;
      if (keys[k] == queries[q]) {
        on = true;
      } else if (mode == core::AttentionMode::bidirectional) {
        on = true;
      } else {
        on = keys[k] < queries[q];
      }
      if (!on) continue;
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) mask.set(q * s + i, k * s + j, true);
      }
    }
  }
  return mask;
}

}  // namespace cascade::denoiser
