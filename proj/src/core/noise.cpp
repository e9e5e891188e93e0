#include "cascade/core/noise.h"

#include <cmath>
#include <numbers>

#include "cascade/core/errors.h"

namespace cascade::core {
namespace {

std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL)); }

// (0, 1] with 53 bits.
double unit_open(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double gaussian_at(std::uint64_t key) {
  const double u1 = unit_open(mix64(key));
  const double u2 = unit_open(mix64(key ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

NoiseStream::NoiseStream(std::uint64_t session_seed, int dim) : seed_(session_seed), dim_(dim) {
  if (dim <= 0) throw InvalidInput("noise stream dim must be positive");
}

std::vector<double> NoiseStream::draw(int block, int pass, int frame) const {
  if (block < 0 || pass < 0 || frame < 0) throw InvalidInput("noise indices must be non-negative");
  std::uint64_t key = combine(seed_, static_cast<std::uint64_t>(block));
  key = combine(key, static_cast<std::uint64_t>(pass));
  key = combine(key, static_cast<std::uint64_t>(frame));
  std::vector<double> out(static_cast<std::size_t>(dim_));
  for (int c = 0; c < dim_; ++c) out[static_cast<std::size_t>(c)] = gaussian_at(combine(key, static_cast<std::uint64_t>(c)));
  return out;
}

Matrix NoiseStream::draw_block(int block, int pass, int first_frame, int frames) const {
  Matrix out(static_cast<std::size_t>(frames), static_cast<std::size_t>(dim_));
  for (int f = 0; f < frames; ++f) {
    auto v = draw(block, pass, first_frame + f);
    std::copy(v.begin(), v.end(), out.row(static_cast<std::size_t>(f)).begin());
  }
  return out;
}

}  // namespace cascade::core
