#pragma once

#include <cstdint>
#include <vector>

#include "rsfl/errors.hpp"

namespace rsfl {

// Prime field F_q with canonical residues in [0, q). q fits in 32 bits and
// products are reduced through 64-bit intermediates, so no overflow path
// exists for the parameter ranges the protocol validates (q > max(C, N)).
class Field {
 public:
  explicit Field(uint32_t q);

  uint32_t q() const { return q_; }

  uint32_t add(uint32_t a, uint32_t b) const {
    uint32_t s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  uint32_t sub(uint32_t a, uint32_t b) const { return a >= b ? a - b : a + q_ - b; }
  uint32_t neg(uint32_t a) const { return a == 0 ? 0 : q_ - a; }
  uint32_t mul(uint32_t a, uint32_t b) const {
    return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) % q_);
  }
  // Canonical residue of a possibly negative 64-bit value.
  uint32_t reduce(int64_t v) const {
    int64_t r = v % static_cast<int64_t>(q_);
    if (r < 0) r += q_;
    return static_cast<uint32_t>(r);
  }

  uint32_t pow(uint32_t a, uint64_t e) const;
  // Multiplicative inverse via extended Euclid; inv(0) raises ZeroInverse.
  uint32_t inv(uint32_t a) const;

  static bool is_prime(uint32_t n);

 private:
  uint32_t q_;
};

}  // namespace rsfl
