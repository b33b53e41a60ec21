#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rsfl/field.hpp"

namespace rsfl {

// Dense row-major matrix over a prime field. Entries are canonical residues.
struct Mat {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<uint32_t> e;

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), e(r * c, 0) {}

  uint32_t& at(size_t r, size_t c) { return e[r * cols + c]; }
  uint32_t at(size_t r, size_t c) const { return e[r * cols + c]; }

  bool operator==(const Mat& o) const {
    return rows == o.rows && cols == o.cols && e == o.e;
  }
};

Mat identity(size_t n);

// Raises DimensionMismatch when inner dimensions disagree.
Mat mat_mul(const Field& f, const Mat& a, const Mat& b);

// Raises Singular for non-invertible input (including non-square).
Mat mat_inv(const Field& f, const Mat& a);

size_t rank(const Field& f, Mat a);

// Solves a.x = b for square a; raises Singular when a is not invertible.
std::vector<uint32_t> solve(const Field& f, Mat a, std::vector<uint32_t> b);

// Row j (0-based) is [1, psi_j, psi_j^2, ..., psi_j^{d-1}].
// Raises DuplicatePsi when evaluation points repeat.
Mat vandermonde(const Field& f, const std::vector<uint32_t>& psis, size_t d);

}  // namespace rsfl
