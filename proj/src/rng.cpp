#include "metapref/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace metapref {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

std::uint64_t mix_bits(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix_bits(mix_bits(a + kGolden) ^ (b + kGolden));
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return mix64(mix64(a, b, c), d);
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix_bits(state_);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

std::size_t Rng::next_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::next_index: n must be positive");
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  // Lemire's multiply-then-reject scheme; unbiased for every n.
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * range;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * range;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

}  // namespace metapref
