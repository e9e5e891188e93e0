#include "cascade/core/conditioning.h"

#include <cmath>
#include <cstdio>

#include "cascade/core/errors.h"
#include "cascade/core/noise.h"

namespace cascade::core {
namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Conditioning embed_prompt(std::string_view prompt, int dim) {
  if (prompt.empty()) throw InvalidInput("prompt must be non-empty");
  if (dim <= 0) throw InvalidInput("conditioning dim must be positive");

  const std::uint64_t seed = mix64(fnv1a(prompt));
  std::vector<double> embedding(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double v = gaussian_at(seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL);
    embedding[static_cast<std::size_t>(i)] = v;
    norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  for (double& v : embedding) v /= norm;

  char id[24];
  std::snprintf(id, sizeof(id), "c%016llx", static_cast<unsigned long long>(fnv1a(prompt)));
  return Conditioning{std::string(prompt), std::move(embedding), id};
}

}  // namespace cascade::core
