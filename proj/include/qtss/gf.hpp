// Copyright 2026 The qtss Authors
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

/**
 * @file gf.hpp
 * @brief Prime field arithmetic and small dense linear algebra over F_q.
 *
 * Everything here is exact. Matrices are tiny (at most a few dozen rows), so
 * the storage is a plain row-major vector and elimination is textbook
 * Gauss-Jordan with first-nonzero pivoting.
 */

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtss/error.hpp"

namespace qtss {

using Residue = std::uint32_t;

constexpr bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return false;
  }
  return true;
}

/// The field F_q for a prime q < 2^16.
class PrimeField {
 public:
  static constexpr std::uint32_t kModulusLimit = 1u << 16;

  explicit PrimeField(std::uint32_t q) : q_(q) {
    if (q >= kModulusLimit) {
      throw Error(ErrorKind::InvalidParams, "modulus " + std::to_string(q) + " exceeds 2^16");
    }
    if (!is_prime(q)) {
      throw Error(ErrorKind::NonPrimeModulus, std::to_string(q) + " is not prime");
    }
  }

  std::uint32_t modulus() const noexcept { return q_; }

  Residue reduce(std::int64_t x) const noexcept {
    const std::int64_t q = q_;
    const std::int64_t r = x % q;
    return static_cast<Residue>(r < 0 ? r + q : r);
  }

  Residue add(Residue a, Residue b) const noexcept { return (a + b) % q_; }
  Residue sub(Residue a, Residue b) const noexcept { return (a + q_ - b) % q_; }
  Residue neg(Residue a) const noexcept { return (q_ - a) % q_; }
  Residue mul(Residue a, Residue b) const noexcept {
    return static_cast<Residue>((static_cast<std::uint64_t>(a) * b) % q_);
  }

  Residue pow(Residue a, std::uint64_t e) const noexcept {
    Residue result = 1 % q_;
    Residue base = a % q_;
    while (e > 0) {
      if (e & 1u) result = mul(result, base);
      base = mul(base, base);
      e >>= 1u;
    }
    return result;
  }

  /// Inverse by Fermat's little theorem.
  Residue inv(Residue a) const {
    if (a % q_ == 0) throw Error(ErrorKind::ZeroInverse, "0 has no inverse in F_" + std::to_string(q_));
    return pow(a, q_ - 2);
  }

  friend bool operator==(const PrimeField&, const PrimeField&) = default;

 private:
  std::uint32_t q_;
};

class FieldVector {
 public:
  FieldVector(PrimeField field, std::vector<Residue> entries) : field_(field), entries_(std::move(entries)) {
    for (auto& e : entries_) e %= field_.modulus();
  }
  FieldVector(PrimeField field, std::initializer_list<Residue> entries)
      : FieldVector(field, std::vector<Residue>(entries)) {}

  static FieldVector zeros(PrimeField field, std::size_t n) { return {field, std::vector<Residue>(n, 0)}; }

  const PrimeField& field() const noexcept { return field_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  Residue operator[](std::size_t i) const { return entries_[i]; }
  std::span<const Residue> entries() const noexcept { return entries_; }

  void set(std::size_t i, Residue value) {
    if (i >= entries_.size()) throw Error(ErrorKind::IndexOutOfRange, "vector index " + std::to_string(i));
    entries_[i] = value % field_.modulus();
  }

  /// Entries [first, first + count).
  FieldVector slice(std::size_t first, std::size_t count) const {
    if (first + count > entries_.size()) {
      throw Error(ErrorKind::IndexOutOfRange, "slice past end of vector");
    }
    return {field_, std::vector<Residue>(entries_.begin() + first, entries_.begin() + first + count)};
  }

  FieldVector concat(const FieldVector& other) const {
    if (!(field_ == other.field_)) throw Error(ErrorKind::DimensionMismatch, "vectors over different fields");
    std::vector<Residue> out = entries_;
    out.insert(out.end(), other.entries_.begin(), other.entries_.end());
    return {field_, std::move(out)};
  }

  friend bool operator==(const FieldVector&, const FieldVector&) = default;

 private:
  PrimeField field_;
  std::vector<Residue> entries_;
};

class FieldMatrix {
 public:
  FieldMatrix(PrimeField field, std::size_t rows, std::size_t cols, std::vector<Residue> entries)
      : field_(field), rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
      throw Error(ErrorKind::DimensionMismatch, "entry count does not match " + std::to_string(rows_) + "x" +
                                                    std::to_string(cols_));
    }
    for (auto& e : entries_) e %= field_.modulus();
  }

  FieldMatrix(PrimeField field, std::initializer_list<std::initializer_list<Residue>> rows)
      : field_(field), rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    entries_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
      for (Residue e : row) entries_.push_back(e % field_.modulus());
    }
  }

  static FieldMatrix zeros(PrimeField field, std::size_t rows, std::size_t cols) {
    return {field, rows, cols, std::vector<Residue>(rows * cols, 0)};
  }

  static FieldMatrix identity(PrimeField field, std::size_t n) {
    auto m = zeros(field, n, n);
    for (std::size_t i = 0; i < n; ++i) m.entries_[i * n + i] = 1 % field.modulus();
    return m;
  }

  const PrimeField& field() const noexcept { return field_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  std::span<const Residue> entries() const noexcept { return entries_; }

  Residue operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

  Residue at(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) throw Error(ErrorKind::IndexOutOfRange, "matrix index out of range");
    return entries_[r * cols_ + c];
  }

  void set(std::size_t r, std::size_t c, Residue value) {
    if (r >= rows_ || c >= cols_) throw Error(ErrorKind::IndexOutOfRange, "matrix index out of range");
    entries_[r * cols_ + c] = value % field_.modulus();
  }

  FieldVector row(std::size_t r) const {
    if (r >= rows_) throw Error(ErrorKind::IndexOutOfRange, "row index out of range");
    return {field_, std::vector<Residue>(entries_.begin() + r * cols_, entries_.begin() + (r + 1) * cols_)};
  }

  FieldVector col(std::size_t c) const {
    if (c >= cols_) throw Error(ErrorKind::IndexOutOfRange, "column index out of range");
    std::vector<Residue> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = entries_[r * cols_ + c];
    return {field_, std::move(out)};
  }

  FieldMatrix negated() const {
    FieldMatrix out = *this;
    for (auto& e : out.entries_) e = field_.neg(e);
    return out;
  }

  bool is_zero() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](Residue e) { return e == 0; });
  }

  friend bool operator==(const FieldMatrix&, const FieldMatrix&) = default;

 private:
  PrimeField field_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Residue> entries_;
};

inline std::ostream& operator<<(std::ostream& os, const FieldVector& v) {
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os << ')';
}

inline std::ostream& operator<<(std::ostream& os, const FieldMatrix& m) {
  os << '[';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << (r ? ",[" : "[");
    for (std::size_t c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(r, c);
    os << ']';
  }
  return os << ']';
}

/// Rows (1, x, x^2, ..., x^{width-1}) for each node x; nodes must be distinct and nonzero.
inline FieldMatrix vandermonde(const FieldVector& nodes, std::size_t width) {
  const PrimeField& f = nodes.field();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == 0) throw Error(ErrorKind::ZeroNode, "node " + std::to_string(i) + " is zero");
    for (std::size_t j = 0; j < i; ++j) {
      if (nodes[i] == nodes[j]) {
        throw Error(ErrorKind::DuplicateNode, "node value " + std::to_string(nodes[i]) + " repeats");
      }
    }
  }
  auto out = FieldMatrix::zeros(f, nodes.size(), width);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Residue power = 1 % f.modulus();
    for (std::size_t j = 0; j < width; ++j) {
      out.set(i, j, power);
      power = f.mul(power, nodes[i]);
    }
  }
  return out;
}

/// Extracts rows and columns in the given order.
inline FieldMatrix submatrix(const FieldMatrix& m, std::span<const std::size_t> row_set,
                             std::span<const std::size_t> col_set) {
  auto check = [](std::span<const std::size_t> set, std::size_t bound, const char* what) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set[i] >= bound) throw Error(ErrorKind::IndexOutOfRange, std::string(what) + " index out of range");
      for (std::size_t j = 0; j < i; ++j) {
        if (set[i] == set[j]) throw Error(ErrorKind::IndexOutOfRange, std::string("duplicate ") + what + " index");
      }
    }
  };
  check(row_set, m.rows(), "row");
  check(col_set, m.cols(), "column");
  std::vector<Residue> out;
  out.reserve(row_set.size() * col_set.size());
  for (std::size_t r : row_set) {
    for (std::size_t c : col_set) out.push_back(m(r, c));
  }
  return {m.field(), row_set.size(), col_set.size(), std::move(out)};
}

inline std::vector<std::size_t> index_range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

/// Contiguous column block [first, first + count) over all rows.
inline FieldMatrix column_block(const FieldMatrix& m, std::size_t first, std::size_t count) {
  const auto rows = index_range(0, m.rows());
  const auto cols = index_range(first, count);
  return submatrix(m, rows, cols);
}

inline FieldVector mat_vec(const FieldMatrix& m, const FieldVector& v) {
  if (!(m.field() == v.field()) || m.cols() != v.size()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix-vector shapes do not agree");
  }
  const PrimeField& f = m.field();
  std::vector<Residue> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::uint64_t acc = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc = (acc + static_cast<std::uint64_t>(m(r, c)) * v[c]) % f.modulus();
    out[r] = static_cast<Residue>(acc);
  }
  return {f, std::move(out)};
}

inline FieldMatrix mat_mul(const FieldMatrix& a, const FieldMatrix& b) {
  if (!(a.field() == b.field()) || a.cols() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix product shapes do not agree");
  }
  const PrimeField& f = a.field();
  std::vector<Residue> out(a.rows() * b.cols(), 0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
      std::uint64_t acc = 0;
      for (std::size_t t = 0; t < a.cols(); ++t) acc = (acc + static_cast<std::uint64_t>(a(r, t)) * b(t, c)) % f.modulus();
      out[r * b.cols() + c] = static_cast<Residue>(acc);
    }
  }
  return {f, a.rows(), b.cols(), std::move(out)};
}

/// Gauss-Jordan inverse; throws Singular for rank-deficient input.
inline FieldMatrix mat_inv(const FieldMatrix& m) {
  if (!m.is_square()) throw Error(ErrorKind::DimensionMismatch, "inverse of a non-square matrix");
  const PrimeField& f = m.field();
  const std::size_t n = m.rows();
  std::vector<Residue> a(m.entries().begin(), m.entries().end());
  std::vector<Residue> inv(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1 % f.modulus();

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot * n + col] == 0) ++pivot;
    if (pivot == n) throw Error(ErrorKind::Singular, "matrix is rank-deficient");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a[pivot * n + c], a[col * n + c]);
        std::swap(inv[pivot * n + c], inv[col * n + c]);
      }
    }
    const Residue scale = f.inv(a[col * n + col]);
    for (std::size_t c = 0; c < n; ++c) {
      a[col * n + c] = f.mul(a[col * n + c], scale);
      inv[col * n + c] = f.mul(inv[col * n + c], scale);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r * n + col] == 0) continue;
      const Residue factor = a[r * n + col];
      for (std::size_t c = 0; c < n; ++c) {
        a[r * n + c] = f.sub(a[r * n + c], f.mul(factor, a[col * n + c]));
        inv[r * n + c] = f.sub(inv[r * n + c], f.mul(factor, inv[col * n + c]));
      }
    }
  }
  return {f, n, n, std::move(inv)};
}

inline bool is_invertible(const FieldMatrix& m) {
  if (!m.is_square()) return false;
  try {
    (void)mat_inv(m);
    return true;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Singular) return false;
    throw;
  }
}

/// Horizontal concatenation [a | b].
inline FieldMatrix hconcat(const FieldMatrix& a, const FieldMatrix& b) {
  if (!(a.field() == b.field()) || a.rows() != b.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "hconcat row counts differ");
  }
  std::vector<Residue> out;
  out.reserve(a.rows() * (a.cols() + b.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out.push_back(a(r, c));
    for (std::size_t c = 0; c < b.cols(); ++c) out.push_back(b(r, c));
  }
  return {a.field(), a.rows(), a.cols() + b.cols(), std::move(out)};
}

inline FieldMatrix transpose(const FieldMatrix& m) {
  std::vector<Residue> out(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[c * m.rows() + r] = m(r, c);
  }
  return {m.field(), m.cols(), m.rows(), std::move(out)};
}

namespace detail {

/// Reduced row echelon form in place; returns the pivot column of each nonzero row.
inline std::vector<std::size_t> row_reduce(const PrimeField& f, std::vector<Residue>& a, std::size_t rows,
                                           std::size_t cols) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < rows; ++col) {
    std::size_t pivot = row;
    while (pivot < rows && a[pivot * cols + col] == 0) ++pivot;
    if (pivot == rows) continue;
    for (std::size_t c = 0; c < cols; ++c) std::swap(a[pivot * cols + c], a[row * cols + c]);
    const Residue scale = f.inv(a[row * cols + col]);
    for (std::size_t c = 0; c < cols; ++c) a[row * cols + c] = f.mul(a[row * cols + c], scale);
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == row || a[r * cols + col] == 0) continue;
      const Residue factor = a[r * cols + col];
      for (std::size_t c = 0; c < cols; ++c) a[r * cols + c] = f.sub(a[r * cols + c], f.mul(factor, a[row * cols + c]));
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace detail

inline std::size_t rank(const FieldMatrix& m) {
  std::vector<Residue> a(m.entries().begin(), m.entries().end());
  return detail::row_reduce(m.field(), a, m.rows(), m.cols()).size();
}

/// Basis of {x : m x = 0}, one basis vector per column (cols x nullity).
inline FieldMatrix kernel(const FieldMatrix& m) {
  const PrimeField& f = m.field();
  std::vector<Residue> a(m.entries().begin(), m.entries().end());
  const auto pivots = detail::row_reduce(f, a, m.rows(), m.cols());
  std::vector<bool> is_pivot(m.cols(), false);
  for (std::size_t c : pivots) is_pivot[c] = true;
  std::vector<std::size_t> free;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (!is_pivot[c]) free.push_back(c);
  }
  auto out = FieldMatrix::zeros(f, m.cols(), free.size());
  for (std::size_t j = 0; j < free.size(); ++j) {
    out.set(free[j], j, 1 % f.modulus());
    for (std::size_t i = 0; i < pivots.size(); ++i) out.set(pivots[i], j, f.neg(a[i * m.cols() + free[j]]));
  }
  return out;
}

/// Vertical concatenation [a; b].
inline FieldMatrix vconcat(const FieldMatrix& a, const FieldMatrix& b) {
  if (!(a.field() == b.field()) || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "vconcat column counts differ");
  }
  std::vector<Residue> out(a.entries().begin(), a.entries().end());
  out.insert(out.end(), b.entries().begin(), b.entries().end());
  return {a.field(), a.rows() + b.rows(), a.cols(), std::move(out)};
}

}  // namespace qtss
