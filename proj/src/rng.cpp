#include "pslb/rng.hpp"

#include <cmath>
#include <numbers>

namespace pslb {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t w : words) h = mix64(h + kGolden + mix64(w ^ h));
  return h;
}

Stream::Stream(std::uint64_t seed, Substream which) noexcept
    : key_(hash_words({seed, static_cast<std::uint64_t>(which)})) {}

std::uint64_t Stream::at(std::uint64_t index) const noexcept {
  return mix64(key_ + (index + 1) * kGolden);
}

double Stream::uniform_at(std::uint64_t index) const noexcept { return to_unit(at(index)); }

double Stream::next_normal() noexcept {
  double u1 = next_uniform();
  double u2 = next_uniform();
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pslb
