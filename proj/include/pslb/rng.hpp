#pragma once

#include <cstdint>
#include <initializer_list>

namespace pslb {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Order-sensitive hash of a tuple of 64-bit words.
std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept;

enum class Substream : std::uint64_t {
  segment_lengths = 1,
  contexts = 2,
  arms = 3,
  noise = 4,
};

// Counter-based generator: the i-th output depends only on (key, i), so a
// stream can be consumed sequentially or addressed at random.
class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t seed, Substream which) noexcept;

  std::uint64_t at(std::uint64_t index) const noexcept;
  double uniform_at(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept { return at(counter_++); }
  // Uniform on [0, 1) with 53 random bits.
  double next_uniform() noexcept { return uniform_at(counter_++); }
  // Standard normal via Box-Muller; consumes two draws.
  double next_normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }
  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

inline double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace pslb
