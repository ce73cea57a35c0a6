// Copyright 2026 The gaplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <ostream>
#include <utility>
#include <vector>

#include "gaplab/error.hpp"

namespace gaplab {

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw RangeError("integer overflow in exact matrix arithmetic");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw RangeError("integer overflow in exact matrix arithmetic");
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw RangeError("integer overflow in exact matrix arithmetic");
  return r;
}

}  // namespace detail

/// Dense row-major integer matrix with overflow-checked arithmetic.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols, std::int64_t fill = 0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  IntMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ConfigError("IntMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static IntMatrix identity(std::size_t n) {
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  std::int64_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::int64_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  IntMatrix transpose() const {
    IntMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
    if (a.cols_ != b.rows_) throw ConfigError("IntMatrix: dimension mismatch in product");
    IntMatrix p(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const std::int64_t aik = a(i, k);
        if (aik == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          p(i, j) = detail::checked_add(p(i, j), detail::checked_mul(aik, b(k, j)));
      }
    return p;
  }

  friend IntMatrix operator-(const IntMatrix& a, const IntMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw ConfigError("IntMatrix: dimension mismatch");
    IntMatrix d(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i) d.data_[i] = detail::checked_sub(a.data_[i], b.data_[i]);
    return d;
  }

  std::vector<std::int64_t> apply(const std::vector<std::int64_t>& v) const {
    if (v.size() != cols_) throw ConfigError("IntMatrix: vector length mismatch");
    std::vector<std::int64_t> out(rows_, 0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        out[i] = detail::checked_add(out[i], detail::checked_mul((*this)(i, j), v[j]));
    return out;
  }

  IntMatrix power(unsigned k) const {
    if (!square()) throw ConfigError("IntMatrix: power of a non-square matrix");
    IntMatrix result = identity(rows_), base = *this;
    while (k) {
      if (k & 1u) result = result * base;
      k >>= 1u;
      if (k) base = base * base;
    }
    return result;
  }

  bool all_positive() const noexcept {
    for (auto x : data_)
      if (x <= 0) return false;
    return true;
  }

  bool nonnegative() const noexcept {
    for (auto x : data_)
      if (x < 0) return false;
    return true;
  }

  /// Fraction-free (Bareiss) elimination; exact for integer input.
  std::int64_t determinant() const {
    if (!square()) throw ConfigError("IntMatrix: determinant of a non-square matrix");
    const std::size_t n = rows_;
    if (n == 0) return 1;
    std::vector<__int128> m(data_.begin(), data_.end());
    auto at = [&](std::size_t r, std::size_t c) -> __int128& { return m[r * n + c]; };
    __int128 prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (at(k, k) == 0) {
        std::size_t piv = k + 1;
        while (piv < n && at(piv, k) == 0) ++piv;
        if (piv == n) return 0;
        for (std::size_t c = 0; c < n; ++c) std::swap(at(k, c), at(piv, c));
        sign = -sign;
      }
      for (std::size_t i = k + 1; i < n; ++i)
        for (std::size_t j = k + 1; j < n; ++j) at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
      prev = at(k, k);
    }
    const __int128 det = sign * at(n - 1, n - 1);
    if (det > INT64_MAX || det < INT64_MIN) throw RangeError("IntMatrix: determinant overflows int64");
    return static_cast<std::int64_t>(det);
  }

  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;

  friend std::ostream& operator<<(std::ostream& os, const IntMatrix& m) {
    os << '[';
    for (std::size_t r = 0; r < m.rows_; ++r) {
      os << (r ? ",[" : "[");
      for (std::size_t c = 0; c < m.cols_; ++c) os << (c ? "," : "") << m(r, c);
      os << ']';
    }
    return os << ']';
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::int64_t> data_;
};

}  // namespace gaplab
