#pragma once

#include <random>

#include "cascade/core/config.h"

namespace cascade::testing {

// Small config in the shape of the default 13-block rollout.
inline core::CascadeConfig small_config(int blocks = 13, int offset = 1, int workers = 5) {
  core::CascadeConfig c;
  c.total_frames = blocks * c.S;
  c.offset = offset;
  c.workers = workers;
  return c;
}

inline core::CascadeConfig uniform_cost(core::CascadeConfig c, double pass = 1.0) {
  c.cost = core::CostParams{pass, 0.0, 0.0, 0.0, 0.0};
  return c;
}

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace cascade::testing
