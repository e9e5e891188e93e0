#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cascade/core/config.h"
#include "cascade/core/matrix.h"

namespace cascade::denoiser {

using core::Matrix;

struct LayerWeights {
  Matrix query;   // D x (heads * head_dim)
  Matrix key;     // D x (heads * head_dim)
  Matrix value;   // D x (heads * head_dim)
  Matrix output;  // (heads * head_dim) x D

  bool operator==(const LayerWeights&) const = default;
};

// Fixed random weights of the toy few-step denoiser. Never trained.
struct ModelWeights {
  std::uint64_t seed = 0;
  int latent_dim = 0;
  int cond_dim = 0;
  core::ModelDims dims;
  Matrix input;        // D x D
  Matrix conditioning; // Dc x D
  Matrix readout;      // D x D, hidden -> x0 prediction
  std::vector<LayerWeights> layers;

  int width() const { return dims.heads * dims.head_dim; }
  bool operator==(const ModelWeights&) const = default;
};

ModelWeights init_model(std::uint64_t weight_seed, int latent_dim, int cond_dim, const core::ModelDims& dims);

// Flat little-endian binary: 8-byte magic, u32 version, header of dims and
// seed, then every matrix in declaration order as f64.
void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

// Per-layer keys/values of one block's frames.
struct LayerKV {
  Matrix keys;    // S x (heads * head_dim)
  Matrix values;  // S x (heads * head_dim)

  bool operator==(const LayerKV&) const = default;
};

struct BlockKV {
  int block_index = 0;
  double noise_tag = 0.0;
  std::string conditioning_id;
  std::vector<LayerKV> layers;

  int frames() const { return layers.empty() ? 0 : static_cast<int>(layers.front().keys.rows()); }
  bool operator==(const BlockKV&) const = default;
};

using KVRef = std::shared_ptr<const BlockKV>;

}  // namespace cascade::denoiser
