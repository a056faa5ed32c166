#pragma once

// Portable, counter-keyed random streams. Every draw is a pure function of the
// key it was derived from, so results never depend on thread scheduling or on
// which standard library is in use (std::normal_distribution is not portable).

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace exlg {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

/// Order-sensitive hash of a key tuple; used to derive every seed in the project.
std::uint64_t hash_seed(std::initializer_list<std::uint64_t> key);

/// FNV-1a of a tag string, for keying sub-streams by name.
std::uint64_t hash_tag(std::string_view tag);

/// SplitMix64 generator with Box-Muller normals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void fill_normal(std::span<double> out);

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Langevin noise and minibatch randomness for one chain, keyed by
/// (seed, iteration, agent). Two chains built with the same seed see identical
/// Gaussian blocks and identical batches whatever algorithm they run.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}
  /// Agent i draws the stream of agent `agent_map[i]`; used to relabel agents.
  NoiseStream(std::uint64_t seed, std::vector<std::size_t> agent_map)
      : seed_(seed), agent_map_(std::move(agent_map)) {}

  std::uint64_t seed() const { return seed_; }

  /// w_i^{(k)}: i.i.d. standard normals.
  void gaussian(std::int64_t k, std::size_t agent, std::span<double> out) const;

  /// Randomness for agent i's minibatch at iteration k.
  Rng batch_rng(std::int64_t k, std::size_t agent) const;

 private:
  std::size_t key(std::size_t agent) const {
    return agent_map_.empty() ? agent : agent_map_.at(agent);
  }

  std::uint64_t seed_;
  std::vector<std::size_t> agent_map_;
};

}  // namespace exlg
