#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sdre {

/// Seeded generator whose draws are identical across platforms and standard
/// libraries: only the raw 64-bit engine output is used, never the
/// implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  /// Draw an index with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard exponential via inversion.
  double exponential();

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  /// Flat Dirichlet(1, ..., 1) sample of length n.
  std::vector<double> dirichlet(std::size_t n);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Stateless seed derivation for independent streams (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Walker/Vose alias table: O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights);

  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace sdre
