#pragma once

#include <cstdint>
#include <vector>

#include "cascade/core/matrix.h"

namespace cascade::core {

// SplitMix64 finalizer. Used as the counter-based mixing function for every
// deterministic stream in the project.
std::uint64_t mix64(std::uint64_t x);

// Standard normal sample keyed by an arbitrary 64-bit counter.
double gaussian_at(std::uint64_t key);

// Gaussian noise addressed by (block, pass, frame). Draws never depend on
// call order, so sequential and cascaded rollouts consume identical noise.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t session_seed, int dim);

  std::uint64_t seed() const { return seed_; }
  int dim() const { return dim_; }

  std::vector<double> draw(int block, int pass, int frame) const;

  // Rows are frames [first_frame, first_frame + frames).
  Matrix draw_block(int block, int pass, int first_frame, int frames) const;

 private:
  std::uint64_t seed_;
  int dim_;
};

}  // namespace cascade::core
