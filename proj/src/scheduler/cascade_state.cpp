#include "cascade/scheduler/cascade_state.h"

#include "cascade/core/errors.h"

namespace cascade::scheduler {
namespace {

core::Block admit(int block_index, int frames, const core::NoiseStream& noise, const core::TimestepSchedule& schedule,
                  const std::string& conditioning_id) {
  core::Block b;
  b.block_index = block_index;
  b.latents = noise.draw_block(block_index, 0, block_index * frames, frames);
  b.noise_level = schedule.level(0);
  b.pass_index = 0;
  b.conditioning_id = conditioning_id;
  return b;
}

}  // namespace

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::fill: return "fill";
    case Phase::steady: return "steady";
    case Phase::drain: return "drain";
    case Phase::done: return "done";
  }
  return "?";
}

Phase CascadeState::phase() const {
  if (next_block >= total_blocks) return in_flight.empty() ? Phase::done : Phase::drain;
  return retired == 0 ? Phase::fill : Phase::steady;
}

CascadeState initial_state(const core::CascadeConfig& config, const core::NoiseStream& noise,
                           const std::string& conditioning_id) {
  config.validate();
  const auto schedule = config.schedule();
  CascadeState s;
  s.total_blocks = config.blocks();
  s.offset = config.offset;
  s.passes = schedule.passes();
  s.conditioning_id = conditioning_id;
  s.in_flight.push_back(admit(0, config.S, noise, schedule, conditioning_id));
  s.next_block = 1;
  return s;
}

core::BatchPlan plan_iteration(const CascadeState& state, const core::CascadeConfig& config) {
  if (state.phase() == Phase::done) throw core::ContractViolation("plan_iteration: cascade already done");
  const auto schedule = config.schedule();
  core::BatchPlan plan;
  plan.iteration = state.iteration;
  for (std::size_t i = 0; i < state.in_flight.size(); ++i) {
    const auto& b = state.in_flight[i];
    plan.entries.push_back(core::PlanEntry{b.block_index, b.pass_index, schedule.level(b.pass_index),
                                           static_cast<int>(i % static_cast<std::size_t>(config.workers)),
                                           state.conditioning_id});
  }
  return plan;
}

ApplyOutcome apply_results(CascadeState& state, const core::BatchPlan& plan,
                           std::span<const denoiser::ForwardOutput> results, const core::NoiseStream& noise,
                           kvpool::KVPool& pool, const core::TimestepSchedule& schedule) {
  if (plan.iteration != state.iteration) throw core::ContractViolation("apply_results: plan is for another iteration");
  if (plan.entries.size() != state.in_flight.size() || results.size() != plan.entries.size()) {
    throw core::ContractViolation("apply_results: results do not match plan");
  }

  ApplyOutcome outcome;
  std::vector<denoiser::KVRef> inserts;
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& entry = plan.entries[i];
    auto& block = state.in_flight[i];
    const auto& result = results[i];
    if (entry.block_index != block.block_index || entry.pass_index != block.pass_index ||
        result.kv.block_index != block.block_index) {
      throw core::ContractViolation("apply_results: entry " + std::to_string(i) + " does not match cascade state");
    }
    const int pass = entry.pass_index;
    if (pass < schedule.final_denoise_pass()) {
      const double next_level = schedule.level(pass + 1);
      const auto eps = noise.draw_block(block.block_index, pass + 1, block.first_frame(), block.frames());
      block.latents = denoiser::renoise(result.x0, eps, next_level);
      block.noise_level = next_level;
    } else if (pass == schedule.final_denoise_pass()) {
      outcome.emitted.emplace_back(block.block_index, result.x0);
      block.latents = result.x0;
      block.noise_level = schedule.cache_level();
    } else {
      inserts.push_back(std::make_shared<const denoiser::BlockKV>(result.kv));
      outcome.retired.push_back(block.block_index);
    }
    block.pass_index = pass + 1;
    block.conditioning_id = state.conditioning_id;
  }

  for (auto& kv : inserts) pool.insert(std::move(kv));
  std::erase_if(state.in_flight, [&](const core::Block& b) { return b.pass_index >= state.passes; });
  state.retired += static_cast<int>(outcome.retired.size());

  state.youngest_passes += 1;
  if (state.youngest_passes == state.offset && state.next_block < state.total_blocks) {
    const int frames = static_cast<int>(results.front().x0.rows());
    state.in_flight.push_back(admit(state.next_block, frames, noise, schedule, state.conditioning_id));
    state.next_block += 1;
    state.youngest_passes = 0;
  }
  state.iteration += 1;
  return outcome;
}

}  // namespace cascade::scheduler
