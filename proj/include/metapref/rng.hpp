#pragma once

#include <cstddef>
#include <cstdint>

namespace metapref {

/// splitmix64 output finalizer: a bijective 64-bit mixing function.
std::uint64_t mix_bits(std::uint64_t z);

/// Combine a seed with stream tags into a derived seed. Used to give every
/// task / episode / stage its own independent stream without sharing state.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

/// Compile-time FNV-1a hash, for naming derived streams.
constexpr std::uint64_t tag64(const char* s) {
  std::uint64_t h = 14695981039346656037ull;
  while (*s != '\0') {
    h = (h ^ static_cast<unsigned char>(*s++)) * 1099511628211ull;
  }
  return h;
}

/// Deterministic generator built on splitmix64. The state transition and all
/// derived draws (uniform doubles, gaussians via the polar method, bounded
/// indices via multiply-with-rejection) are specified entirely by this class,
/// so sequences are byte-identical across platforms and standard libraries.
/// Each instance is owned by one logical thread; fork() derives independent
/// child streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double();

  /// Standard normal (Marsaglia polar method; one value cached).
  double next_gaussian();

  /// Uniform in {0, ..., n-1}; n must be positive.
  std::size_t next_index(std::size_t n);

  /// Child stream keyed by (current state, tag); does not advance the parent.
  Rng fork(std::uint64_t tag) const { return Rng(mix64(state_, tag)); }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace metapref
