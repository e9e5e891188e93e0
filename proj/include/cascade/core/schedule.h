#pragma once

#include <span>
#include <vector>

namespace cascade::core {

// Descending denoise noise levels followed by one zero-noise cache pass.
// Pass p in [0, passes()-2] denoises at denoise_levels[p]; the last pass
// (cache pass) runs at level 0 and only produces KV for successors.
class TimestepSchedule {
 public:
  static constexpr double kMaxLevel = 1000.0;
  static constexpr double kCacheLevel = 0.0;

  TimestepSchedule();  // {1000, 750, 500, 250}

  std::span<const double> denoise_levels() const { return levels_; }
  double cache_level() const { return kCacheLevel; }
  int passes() const { return static_cast<int>(levels_.size()) + 1; }
  int cache_pass() const { return passes() - 1; }
  int final_denoise_pass() const { return passes() - 2; }

  // Noise level of pass p; throws ContractViolation outside [0, passes()).
  double level(int pass) const;
  bool is_level(double level) const;

  bool operator==(const TimestepSchedule&) const = default;

 private:
  friend TimestepSchedule make_schedule(std::vector<double> levels);
  explicit TimestepSchedule(std::vector<double> levels) : levels_(std::move(levels)) {}

  std::vector<double> levels_;
};

// Throws InvalidSchedule unless levels are non-empty, strictly decreasing
// and inside (0, 1000].
TimestepSchedule make_schedule(std::vector<double> levels);

}  // namespace cascade::core
