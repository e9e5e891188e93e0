#include "cascade/denoiser/model.h"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "cascade/core/errors.h"
#include "cascade/core/noise.h"

namespace cascade::denoiser {
namespace {

constexpr std::array<char, 8> kMagic{'B', 'C', 'W', 'G', 'H', 'T', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;

Matrix random_matrix(std::uint64_t seed, std::uint64_t tag, int rows, int cols, double gain = 1.0) {
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  const double scale = gain / std::sqrt(static_cast<double>(rows));
  const std::uint64_t base = core::mix64(seed ^ core::mix64(tag));
  auto data = m.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = scale * core::gaussian_at(base + i);
  return m;
}

template <typename Fn>
void for_each_matrix(ModelWeights& w, Fn&& fn) {
  fn(w.input);
  fn(w.conditioning);
  fn(w.readout);
  for (auto& layer : w.layers) {
    fn(layer.query);
    fn(layer.key);
    fn(layer.value);
    fn(layer.output);
  }
}

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw core::InvalidInput("weight file truncated");
  return v;
}

}  // namespace

ModelWeights init_model(std::uint64_t weight_seed, int latent_dim, int cond_dim, const core::ModelDims& dims) {
  if (latent_dim <= 0 || cond_dim <= 0 || dims.layers <= 0 || dims.heads <= 0 || dims.head_dim <= 0) {
    throw core::InvalidInput("model dims must be positive");
  }
  ModelWeights w;
  w.seed = weight_seed;
  w.latent_dim = latent_dim;
  w.cond_dim = cond_dim;
  w.dims = dims;
  const int width = w.width();
  w.input = random_matrix(weight_seed, 1, latent_dim, latent_dim);
  w.conditioning = random_matrix(weight_seed, 2, cond_dim, latent_dim);
  w.readout = random_matrix(weight_seed, 3, latent_dim, latent_dim);
  for (int l = 0; l < dims.layers; ++l) {
    const std::uint64_t tag = 100 + 10 * static_cast<std::uint64_t>(l);
    w.layers.push_back(LayerWeights{
        random_matrix(weight_seed, tag + 0, latent_dim, width),
        random_matrix(weight_seed, tag + 1, latent_dim, width),
        random_matrix(weight_seed, tag + 2, latent_dim, width),
        random_matrix(weight_seed, tag + 3, width, latent_dim, 0.5),
    });
  }
  return w;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw core::InvalidInput("cannot write weight file " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, weights.seed);
  for (int v : {weights.latent_dim, weights.cond_dim, weights.dims.layers, weights.dims.heads, weights.dims.head_dim}) {
    put<std::int32_t>(out, v);
  }
  auto copy = weights;
  for_each_matrix(copy, [&](Matrix& m) {
    auto d = m.data();
    out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
  });
  if (!out) throw core::InvalidInput("failed writing weight file " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw core::InvalidInput("cannot open weight file " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw core::InvalidInput("not a weight snapshot: " + path.string());
  if (take<std::uint32_t>(in) != kVersion) throw core::InvalidInput("unsupported weight snapshot version");
  const auto seed = take<std::uint64_t>(in);
  const int latent = take<std::int32_t>(in);
  const int cond = take<std::int32_t>(in);
  core::ModelDims dims{take<std::int32_t>(in), take<std::int32_t>(in), take<std::int32_t>(in)};

  // Shapes come from the header; payload overwrites the seeded values.
  ModelWeights w = init_model(seed, latent, cond, dims);
  for_each_matrix(w, [&](Matrix& m) {
    auto d = m.data();
    in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!in) throw core::InvalidInput("weight file truncated");
  });
  return w;
}

}  // namespace cascade::denoiser
