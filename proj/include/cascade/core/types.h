#pragma once

#include <string>
#include <vector>

#include "cascade/core/matrix.h"

namespace cascade::core {

struct LatentFrame {
  int frame_index = 0;
  std::vector<double> values;
  double noise_level = 0.0;
};

// S contiguous latent frames denoised together. Frames cover
// [block_index * S, (block_index + 1) * S) and share one noise level.
struct Block {
  int block_index = 0;
  Matrix latents;  // S x D
  double noise_level = 0.0;
  int pass_index = 0;  // completed passes
  std::string conditioning_id;

  int frames() const { return static_cast<int>(latents.rows()); }
  int first_frame() const { return block_index * frames(); }
  LatentFrame frame(int i) const;
};

struct PlanEntry {
  int block_index = 0;
  int pass_index = 0;
  double noise_level = 0.0;
  int worker = 0;
  std::string conditioning_id;

  bool operator==(const PlanEntry&) const = default;
};

// Work for one cascade iteration, sorted by block index.
struct BatchPlan {
  int iteration = 0;
  std::vector<PlanEntry> entries;

  std::size_t width() const { return entries.size(); }
  bool operator==(const BatchPlan&) const = default;
};

enum class AttentionMode { causal, bidirectional };
enum class SwitchMode { cascade, recache };

const char* to_string(AttentionMode mode);
const char* to_string(SwitchMode mode);
AttentionMode parse_attention_mode(const std::string& text);
SwitchMode parse_switch_mode(const std::string& text);

struct SwitchEvent {
  int request_iteration = 0;  // iteration that runs first under the new prompt
  int effective_block = 0;    // first block whose cache pass uses the new prompt
  SwitchMode mode = SwitchMode::cascade;
  int extra_passes = 0;
  double stall_time = 0.0;  // modeled
  std::string prompt;
  std::string conditioning_id;

  bool operator==(const SwitchEvent&) const = default;
};

}  // namespace cascade::core
