#include "rsfl/matrix.hpp"

#include <set>
#include <string>

namespace rsfl {
namespace {

// In-place Gauss-Jordan over F_q. Reduces `a` to reduced row echelon form and
// applies the same row operations to `aug` when it is non-null (same row
// count). Returns the rank.
size_t gauss(const Field& f, Mat& a, Mat* aug) {
  size_t r = 0;
  for (size_t c = 0; c < a.cols && r < a.rows; ++c) {
    size_t pivot = r;
    while (pivot < a.rows && a.at(pivot, c) == 0) ++pivot;
    if (pivot == a.rows) continue;
    if (pivot != r) {
      for (size_t j = 0; j < a.cols; ++j) std::swap(a.e[pivot * a.cols + j], a.e[r * a.cols + j]);
      if (aug) {
        for (size_t j = 0; j < aug->cols; ++j) {
          std::swap(aug->e[pivot * aug->cols + j], aug->e[r * aug->cols + j]);
        }
      }
    }
    uint32_t pinv = f.inv(a.at(r, c));
    for (size_t j = 0; j < a.cols; ++j) a.at(r, j) = f.mul(a.at(r, j), pinv);
    if (aug) {
      for (size_t j = 0; j < aug->cols; ++j) aug->at(r, j) = f.mul(aug->at(r, j), pinv);
    }
    for (size_t i = 0; i < a.rows; ++i) {
      if (i == r || a.at(i, c) == 0) continue;
      uint32_t factor = a.at(i, c);
      for (size_t j = 0; j < a.cols; ++j) {
        a.at(i, j) = f.sub(a.at(i, j), f.mul(factor, a.at(r, j)));
      }
      if (aug) {
        for (size_t j = 0; j < aug->cols; ++j) {
          aug->at(i, j) = f.sub(aug->at(i, j), f.mul(factor, aug->at(r, j)));
        }
      }
    }
    ++r;
  }
  return r;
}

}  // namespace

Mat identity(size_t n) {
  Mat m(n, n);
  for (size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Mat mat_mul(const Field& f, const Mat& a, const Mat& b) {
  if (a.cols != b.rows) {
    fail(ErrorCode::DimensionMismatch,
         "mat_mul " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
             " by " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
  Mat out(a.rows, b.cols);
  for (size_t i = 0; i < a.rows; ++i) {
    for (size_t k = 0; k < a.cols; ++k) {
      uint32_t av = a.at(i, k);
      if (av == 0) continue;
      for (size_t j = 0; j < b.cols; ++j) {
        out.at(i, j) = f.add(out.at(i, j), f.mul(av, b.at(k, j)));
      }
    }
  }
  return out;
}

Mat mat_inv(const Field& f, const Mat& a) {
  if (a.rows != a.cols) fail(ErrorCode::Singular, "inverse of non-square matrix");
  Mat work = a;
  Mat aug = identity(a.rows);
  size_t r = gauss(f, work, &aug);
  if (r != a.rows) fail(ErrorCode::Singular, "matrix rank " + std::to_string(r));
  return aug;
}

size_t rank(const Field& f, Mat a) { return gauss(f, a, nullptr); }

std::vector<uint32_t> solve(const Field& f, Mat a, std::vector<uint32_t> b) {
  if (a.rows != a.cols || b.size() != a.rows) {
    fail(ErrorCode::DimensionMismatch, "solve shape");
  }
  Mat aug(a.rows, 1);
  for (size_t i = 0; i < b.size(); ++i) aug.at(i, 0) = b[i];
  size_t r = gauss(f, a, &aug);
  if (r != a.rows) fail(ErrorCode::Singular, "linear system rank " + std::to_string(r));
  std::vector<uint32_t> x(a.rows);
  for (size_t i = 0; i < a.rows; ++i) x[i] = aug.at(i, 0);
  return x;
}

Mat vandermonde(const Field& f, const std::vector<uint32_t>& psis, size_t d) {
  std::set<uint32_t> seen;
  for (uint32_t p : psis) {
    if (!seen.insert(p % f.q()).second) {
      fail(ErrorCode::DuplicatePsi, "evaluation point " + std::to_string(p));
    }
  }
  Mat m(psis.size(), d);
  for (size_t i = 0; i < psis.size(); ++i) {
    uint32_t acc = 1;
    for (size_t j = 0; j < d; ++j) {
      m.at(i, j) = acc;
      acc = f.mul(acc, psis[i] % f.q());
    }
  }
  return m;
}

}  // namespace rsfl
