#include "cascade/core/schedule.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cascade/core/errors.h"

namespace cascade::core {

TimestepSchedule::TimestepSchedule() : levels_{1000, 750, 500, 250} {}

double TimestepSchedule::level(int pass) const {
  if (pass < 0 || pass >= passes()) {
    throw ContractViolation("pass index " + std::to_string(pass) + " outside schedule");
  }
  return pass == cache_pass() ? kCacheLevel : levels_[static_cast<std::size_t>(pass)];
}

bool TimestepSchedule::is_level(double level) const {
  return level == kCacheLevel || std::find(levels_.begin(), levels_.end(), level) != levels_.end();
}

TimestepSchedule make_schedule(std::vector<double> levels) {
  if (levels.empty()) throw InvalidSchedule("schedule needs at least one denoise level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double t = levels[i];
    if (!std::isfinite(t) || t <= TimestepSchedule::kCacheLevel || t > TimestepSchedule::kMaxLevel) {
      throw InvalidSchedule("level " + std::to_string(t) + " outside (0, 1000]");
    }
    if (i > 0 && !(t < levels[i - 1])) {
      throw InvalidSchedule("levels must be strictly decreasing");
    }
  }
  return TimestepSchedule(std::move(levels));
}

}  // namespace cascade::core
