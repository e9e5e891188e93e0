#include "cascade/executor/executor.h"

#include <algorithm>
#include <chrono>

#include "cascade/core/noise.h"

namespace cascade::executor {

Executor::Executor(int workers, CostModel cost) : workers_(workers), cost_(cost) {
  if (workers < 1) throw core::InvalidInput("executor needs at least one worker");
  if (workers > 1) pool_ = std::make_unique<WorkerPool>(workers);
}

ExecutionResult Executor::execute(const core::BatchPlan& plan, std::span<const denoiser::BatchInput> inputs,
                                  std::span<const denoiser::KVRef> pool_snapshot, const denoiser::ModelWeights& weights,
                                  core::AttentionMode mode) const {
  if (plan.entries.empty()) throw core::ContractViolation("execute: empty plan");
  if (inputs.size() != plan.entries.size()) throw core::ContractViolation("execute: inputs do not match plan");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].block_index != plan.entries[i].block_index || inputs[i].noise_level != plan.entries[i].noise_level) {
      throw core::ContractViolation("execute: input " + std::to_string(i) + " does not match plan entry");
    }
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<denoiser::MaskBlock> batch_blocks;
  for (const auto& e : plan.entries) batch_blocks.push_back({e.block_index, e.noise_level});
  std::vector<int> pool_blocks;
  for (const auto& kv : pool_snapshot) pool_blocks.push_back(kv->block_index);
  const int frames = static_cast<int>(inputs.front().latents.rows());
  const auto mask = denoiser::build_mask(batch_blocks, pool_blocks, mode, frames);

  denoiser::BatchForward fwd(weights, inputs, pool_snapshot, mask);
  const std::size_t n = fwd.entries();

  auto stage = [&](const auto& fn) {
    auto body = [&](int worker) {
      for (std::size_t e = 0; e < n; ++e) {
        if (worker_for(e, workers_) != worker) continue;
        try {
          fn(e);
        } catch (const ExecutionError&) {
          throw;
        } catch (const std::exception& ex) {
          throw ExecutionError(inputs[e].block_index, ex.what());
        }
      }
    };
    if (pool_) {
      pool_->run(body);
    } else {
      body(0);
    }
  };

  stage([&](std::size_t e) { fwd.embed(e); });
  for (int l = 0; l < fwd.layers(); ++l) {
    stage([&](std::size_t e) { fwd.project(l, e); });
    stage([&](std::size_t e) { fwd.attend(l, e); });
  }
  stage([&](std::size_t e) { fwd.finish(e); });

  ExecutionResult result;
  result.outputs = fwd.take_outputs();
  std::vector<double> load(static_cast<std::size_t>(workers_), 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    const int w = worker_for(e, workers_);
    const int visible = result.outputs[e].visible_frames;
    const double c = cost_.pass_cost(visible);
    load[static_cast<std::size_t>(w)] += c;
    result.timing.push_back(EntryTiming{w, visible, c});
  }
  result.modeled_compute = *std::max_element(load.begin(), load.end());
  const int used = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(workers_)));
  if (used > 1) {
    result.kv_frames_exchanged = static_cast<int>(n) * frames;
    result.modeled_comm = cost_.comm_cost(result.kv_frames_exchanged);
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Decoder::Decoder(int latent_dim, int pixel_dim, int video_frames_per_latent)
    : latent_dim_(latent_dim), pixel_dim_(pixel_dim), frames_per_latent_(video_frames_per_latent) {
  if (latent_dim < 1 || pixel_dim < 1 || video_frames_per_latent < 1) throw core::InvalidInput("decoder dims must be positive");
  for (int k = 0; k < video_frames_per_latent; ++k) {
    core::Matrix m(static_cast<std::size_t>(latent_dim), static_cast<std::size_t>(pixel_dim));
    const std::uint64_t base = core::mix64(0x5eed0dec0de00000ULL + static_cast<std::uint64_t>(k));
    for (int i = 0; i < latent_dim; ++i) {
      for (int j = 0; j < pixel_dim; ++j) {
        const auto idx = static_cast<std::uint64_t>(i * pixel_dim + j);
        // Identity-dominant first map keeps the stack full rank even when
        // pixel_dim < latent_dim * frames.
        const double diag = (k == 0 && i % pixel_dim == j && i < pixel_dim) ? 1.0 : 0.0;
        m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = diag + 0.25 * core::gaussian_at(base + idx);
      }
    }
    maps_.push_back(std::move(m));
  }
}

core::Matrix Decoder::decode(const core::Matrix& latents) const {
  if (latents.cols() != static_cast<std::size_t>(latent_dim_)) throw core::ContractViolation("decode: latent dim mismatch");
  const std::size_t frames = latents.rows();
  core::Matrix out(frames * static_cast<std::size_t>(frames_per_latent_), static_cast<std::size_t>(pixel_dim_));
  for (std::size_t f = 0; f < frames; ++f) {
    for (int k = 0; k < frames_per_latent_; ++k) {
      const auto& m = maps_[static_cast<std::size_t>(k)];
      const std::size_t row = f * static_cast<std::size_t>(frames_per_latent_) + static_cast<std::size_t>(k);
      for (int j = 0; j < pixel_dim_; ++j) {
        double acc = 0.0;
        for (int i = 0; i < latent_dim_; ++i) acc += latents(f, static_cast<std::size_t>(i)) * m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        out(row, static_cast<std::size_t>(j)) = acc;
      }
    }
  }
  return out;
}

core::Matrix decode_block(const core::Matrix& latents, const core::CascadeConfig& config) {
  return Decoder(config.D, config.pixel_dim, config.video_frames_per_latent).decode(latents);
}

}  // namespace cascade::executor
