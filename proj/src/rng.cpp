#include "exlg/rng.hpp"

#include <cmath>
#include <numbers>

namespace exlg {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kGaussianTag = 0x6761757373ULL;  // "gauss"
constexpr std::uint64_t kBatchTag = 0x6261746368ULL;     // "batch"
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_seed(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t k : key) h = mix64(h + kGolden + mix64(k));
  return h;
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= limit) return x % n;
  }
}

void Rng::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

void NoiseStream::gaussian(std::int64_t k, std::size_t agent, std::span<double> out) const {
  Rng rng(hash_seed({seed_, kGaussianTag, static_cast<std::uint64_t>(k), key(agent)}));
  rng.fill_normal(out);
}

Rng NoiseStream::batch_rng(std::int64_t k, std::size_t agent) const {
  return Rng(hash_seed({seed_, kBatchTag, static_cast<std::uint64_t>(k), key(agent)}));
}

}  // namespace exlg
