#include "cascade/denoiser/forward.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascade/core/errors.h"

namespace cascade::denoiser {
namespace {

using core::ContractViolation;

// out = a * b, accumulated left to right.
Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.cols(); ++i) acc += a(r, i) * b(i, c);
      out(r, c) = acc;
    }
  }
  return out;
}

double position_embedding(int frame, std::size_t c, std::size_t dim) {
  const double rate = std::pow(10000.0, -static_cast<double>(c / 2 * 2) / static_cast<double>(dim));
  const double angle = static_cast<double>(frame) * rate;
  return 0.5 * (c % 2 == 0 ? std::sin(angle) : std::cos(angle));
}

double level_embedding(double level, std::size_t c) {
  const double t = level / core::TimestepSchedule::kMaxLevel;
  return 0.5 * std::sin(3.0 * static_cast<double>(c + 1) * t + 0.3 * static_cast<double>(c));
}

void rms_normalize(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double ms = 0.0;
    for (double v : row) ms += v * v;
    const double scale = 1.0 / std::sqrt(ms / static_cast<double>(row.size()) + 1e-6);
    for (double& v : row) v *= scale;
  }
}

}  // namespace

BatchForward::BatchForward(const ModelWeights& weights, std::span<const BatchInput> batch,
                           std::span<const KVRef> visible_kv, const AttentionMask& mask)
    : weights_(weights), batch_(batch), visible_(visible_kv), mask_(mask), slots_(batch.size()) {
  if (batch.empty()) throw ContractViolation("forward: empty batch");
  const auto frames = static_cast<std::size_t>(mask.frames_per_block());
  const auto dim = static_cast<std::size_t>(weights.latent_dim);

  if (mask.query_blocks().size() != batch.size()) throw ContractViolation("forward: mask rows do not match batch");
  if (mask.key_blocks().size() != visible_kv.size() + batch.size()) {
    throw ContractViolation("forward: mask columns do not match pool + batch");
  }
  for (std::size_t i = 0; i < visible_kv.size(); ++i) {
    const auto& kv = visible_kv[i];
    if (!kv || kv->block_index != mask.key_blocks()[i]) throw ContractViolation("forward: pool KV order does not match mask");
    if (kv->layers.size() != weights.layers.size()) throw ContractViolation("forward: pool KV layer count mismatch");
    for (const auto& layer : kv->layers) {
      if (layer.keys.rows() != frames || layer.keys.cols() != static_cast<std::size_t>(weights.width()) ||
          !layer.keys.same_shape(layer.values)) {
        throw ContractViolation("forward: pool KV shape mismatch");
      }
    }
  }
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto& in = batch[e];
    if (in.block_index != mask.query_blocks()[e] || in.block_index != mask.key_blocks()[visible_kv.size() + e]) {
      throw ContractViolation("forward: batch order does not match mask");
    }
    if (in.latents.rows() != frames || in.latents.cols() != dim) throw ContractViolation("forward: latent shape mismatch");
    if (in.conditioning == nullptr || in.conditioning->embedding.size() != static_cast<std::size_t>(weights.cond_dim)) {
      throw ContractViolation("forward: conditioning missing or wrong dim");
    }
    if (!in.latents.all_finite() || !std::isfinite(in.noise_level)) {
      throw core::NumericError("forward: non-finite input for block " + std::to_string(in.block_index));
    }
  }
}

void BatchForward::embed(std::size_t entry) {
  const auto& in = batch_[entry];
  Slot& slot = slots_[entry];
  const auto dim = static_cast<std::size_t>(weights_.latent_dim);
  Matrix cond(1, in.conditioning->embedding.size(), in.conditioning->embedding);
  const Matrix cond_term = matmul(cond, weights_.conditioning);

  slot.hidden = matmul(in.latents, weights_.input);
  const int first_frame = in.block_index * mask_.frames_per_block();
  for (std::size_t r = 0; r < slot.hidden.rows(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      slot.hidden(r, c) += position_embedding(first_frame + static_cast<int>(r), c, dim) +
                           level_embedding(in.noise_level, c) + cond_term(0, c);
    }
  }
  slot.kv.assign(weights_.layers.size(), LayerKV{});
}

void BatchForward::project(int layer, std::size_t entry) {
  Slot& slot = slots_[entry];
  const auto& w = weights_.layers[static_cast<std::size_t>(layer)];
  slot.queries = matmul(slot.hidden, w.query);
  slot.kv[static_cast<std::size_t>(layer)] = LayerKV{matmul(slot.hidden, w.key), matmul(slot.hidden, w.value)};
}

const LayerKV& BatchForward::key_block(int layer, std::size_t column) const {
  if (column < visible_.size()) return visible_[column]->layers[static_cast<std::size_t>(layer)];
  return slots_[column - visible_.size()].kv[static_cast<std::size_t>(layer)];
}

void BatchForward::attend(int layer, std::size_t entry) {
  Slot& slot = slots_[entry];
  const auto frames = static_cast<std::size_t>(mask_.frames_per_block());
  const auto heads = static_cast<std::size_t>(weights_.dims.heads);
  const auto head_dim = static_cast<std::size_t>(weights_.dims.head_dim);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const std::size_t key_blocks = mask_.key_blocks().size();

  std::vector<double> scores;
  scores.reserve(key_blocks * frames);
  slot.attended = Matrix(frames, heads * head_dim);

  for (std::size_t r = 0; r < frames; ++r) {
    const std::size_t mask_row = entry * frames + r;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * head_dim;
      scores.clear();
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t kb = 0; kb < key_blocks; ++kb) {
        if (!mask_.visible(mask_row, kb * frames)) continue;
        const LayerKV& kv = key_block(layer, kb);
        for (std::size_t kf = 0; kf < frames; ++kf) {
          if (!mask_.visible(mask_row, kb * frames + kf)) continue;
          double dot = 0.0;
          for (std::size_t i = 0; i < head_dim; ++i) dot += slot.queries(r, off + i) * kv.keys(kf, off + i);
          dot *= inv_sqrt;
          scores.push_back(dot);
          top = std::max(top, dot);
        }
      }
      double total = 0.0;
      for (double& s : scores) {
        s = std::exp(s - top);
        total += s;
      }
      std::size_t n = 0;
      for (std::size_t kb = 0; kb < key_blocks; ++kb) {
        if (!mask_.visible(mask_row, kb * frames)) continue;
        const LayerKV& kv = key_block(layer, kb);
        for (std::size_t kf = 0; kf < frames; ++kf) {
          if (!mask_.visible(mask_row, kb * frames + kf)) continue;
          const double p = scores[n++] / total;
          for (std::size_t i = 0; i < head_dim; ++i) slot.attended(r, off + i) += p * kv.values(kf, off + i);
        }
      }
    }
  }

  const Matrix projected = matmul(slot.attended, weights_.layers[static_cast<std::size_t>(layer)].output);
  auto hd = slot.hidden.data();
  auto pd = projected.data();
  for (std::size_t i = 0; i < hd.size(); ++i) hd[i] += pd[i];
  rms_normalize(slot.hidden);
}

void BatchForward::finish(std::size_t entry) {
  Slot& slot = slots_[entry];
  const auto& in = batch_[entry];
  slot.out.x0 = matmul(slot.hidden, weights_.readout);
  if (!slot.out.x0.all_finite()) {
    throw core::NumericError("forward: non-finite output for block " + std::to_string(in.block_index));
  }
  slot.out.kv = BlockKV{in.block_index, in.noise_level, in.conditioning->id, std::move(slot.kv)};
  slot.out.visible_frames = mask_.visible_key_frames(entry);
}

std::vector<ForwardOutput> BatchForward::take_outputs() {
  std::vector<ForwardOutput> out;
  out.reserve(slots_.size());
  for (auto& slot : slots_) out.push_back(std::move(slot.out));
  return out;
}

std::vector<ForwardOutput> forward(const ModelWeights& weights, std::span<const BatchInput> batch,
                                   std::span<const KVRef> visible_kv, const AttentionMask& mask) {
  BatchForward fwd(weights, batch, visible_kv, mask);
  for (std::size_t e = 0; e < fwd.entries(); ++e) fwd.embed(e);
  for (int l = 0; l < fwd.layers(); ++l) {
    for (std::size_t e = 0; e < fwd.entries(); ++e) fwd.project(l, e);
    for (std::size_t e = 0; e < fwd.entries(); ++e) fwd.attend(l, e);
  }
  for (std::size_t e = 0; e < fwd.entries(); ++e) fwd.finish(e);
  return fwd.take_outputs();
}

Matrix renoise(const Matrix& x0, const Matrix& eps, double level) {
  if (!x0.same_shape(eps)) throw ContractViolation("renoise: shape mismatch");
  if (!(level >= 0.0 && level <= core::TimestepSchedule::kMaxLevel)) {
    throw ContractViolation("renoise: level outside [0, 1000]");
  }
  if (level == 0.0) return x0;
  if (level == core::TimestepSchedule::kMaxLevel) return eps;
  const double sigma = level / core::TimestepSchedule::kMaxLevel;
  Matrix out(x0.rows(), x0.cols());
  auto o = out.data();
  auto a = x0.data();
  auto b = eps.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (1.0 - sigma) * a[i] + sigma * b[i];
  return out;
}

}  // namespace cascade::denoiser
