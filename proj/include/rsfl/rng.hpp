#pragma once

#include <cstdint>
#include <string_view>

namespace rsfl {

// Deterministic splitmix64 stream. All randomness in the library flows through
// this generator so transcripts are reproducible across platforms; std::
// distributions are avoided because their outputs are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n) via rejection; exact, no modulo bias.
  uint64_t below(uint64_t n) {
    const uint64_t limit = ~0ull - (~0ull % n + 1) % n;
    uint64_t x = next();
    while (x > limit) x = next();
    return x % n;
  }

 private:
  uint64_t state_;
};

inline uint64_t fnv1a64(const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// Named substream: one logical random tape per (seed, label). Labels are part
// of the wire-visible determinism contract, so they never change casually.
inline Rng substream(uint64_t seed, std::string_view label) {
  uint64_t h = fnv1a64(label);
  Rng mix(seed ^ (h + 0x9e3779b97f4a7c15ull));
  mix.next();
  return mix;
}

}  // namespace rsfl
