#pragma once

#include <cstdint>
#include <string_view>

namespace daf {

/// Deterministic pseudo-random source. splitmix64 core with hand-rolled
/// uniform/normal transforms so that output bytes do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a master seed and a purpose
/// label, e.g. sub_seed(seed, "episode/17"). Same inputs, same seed.
std::uint64_t sub_seed(std::uint64_t master, std::string_view purpose);

/// Numeric variant for data-derived salts.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt);

/// FNV-1a over raw bytes.
std::uint64_t hash_bytes(const void* data, std::size_t size);

}  // namespace daf
