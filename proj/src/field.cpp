#include "rsfl/field.hpp"

namespace rsfl {

Field::Field(uint32_t q) : q_(q) {
  if (!is_prime(q)) fail(ErrorCode::NotAPrime, "field modulus " + std::to_string(q));
}

uint32_t Field::pow(uint32_t a, uint64_t e) const {
  uint64_t base = a % q_;
  uint64_t acc = 1;
  while (e > 0) {
    if (e & 1) acc = acc * base % q_;
    base = base * base % q_;
    e >>= 1;
  }
  return static_cast<uint32_t>(acc);
}

uint32_t Field::inv(uint32_t a) const {
  a %= q_;
  if (a == 0) fail(ErrorCode::ZeroInverse, "inverse of zero");
  int64_t t = 0, new_t = 1;
  int64_t r = q_, new_r = a;
  while (new_r != 0) {
    int64_t quot = r / new_r;
    int64_t tmp = t - quot * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - quot * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (t < 0) t += q_;
  return static_cast<uint32_t>(t);
}

bool Field::is_prime(uint32_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (uint64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

}  // namespace rsfl
