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

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "qtss/gf.hpp"

namespace {

using qtss::ErrorKind;
using qtss::FieldMatrix;
using qtss::FieldVector;
using qtss::PrimeField;

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const qtss::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected qtss::Error";
  return ErrorKind::ConfigInvalid;
}

oracle::Dense to_dense(const FieldMatrix& m) {
  oracle::Dense out(m.rows(), std::vector<oracle::Int>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  }
  return out;
}

TEST(PrimeField, Arithmetic) {
  PrimeField f(5);
  EXPECT_EQ(f.add(3, 4), 2u);
  EXPECT_EQ(f.mul(2, 4), 3u);
  EXPECT_EQ(f.sub(0, 1), 4u);
  EXPECT_EQ(f.neg(0), 0u);
  EXPECT_EQ(f.neg(2), 3u);
}

TEST(PrimeField, Inverse) {
  EXPECT_EQ(PrimeField(5).inv(2), 3u);
  EXPECT_EQ(PrimeField(7).inv(1), 1u);
  EXPECT_EQ(kind_of([] { PrimeField(5).inv(0); }), ErrorKind::ZeroInverse);
}

TEST(PrimeField, RejectsComposites) {
  EXPECT_EQ(kind_of([] { PrimeField(1); }), ErrorKind::NonPrimeModulus);
  EXPECT_EQ(kind_of([] { PrimeField(9); }), ErrorKind::NonPrimeModulus);
  EXPECT_EQ(kind_of([] { PrimeField(65536); }), ErrorKind::InvalidParams);
  EXPECT_NO_THROW(PrimeField(65521));
}

TEST(PrimeField, RingAxiomsExhaustive) {
  for (std::uint32_t q : {2u, 3u, 5u, 7u, 11u, 13u}) {
    PrimeField f(q);
    for (std::uint32_t a = 0; a < q; ++a) {
      if (a != 0) {
        EXPECT_EQ(f.mul(a, f.inv(a)), 1u);
        EXPECT_EQ(f.inv(f.inv(a)), a);
      }
      EXPECT_EQ(f.add(a, f.neg(a)), 0u);
      for (std::uint32_t b = 0; b < q; ++b) {
        EXPECT_EQ(f.add(a, b), (a + b) % q);
        EXPECT_EQ(f.mul(a, b), (a * b) % q);
        EXPECT_EQ(f.add(f.sub(a, b), b), a);
        for (std::uint32_t c = 0; c < q; ++c) {
          EXPECT_EQ(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        }
      }
    }
  }
}

TEST(Vandermonde, SmallExamples) {
  PrimeField f5(5);
  const auto v = qtss::vandermonde(FieldVector(f5, {1, 2, 3}), 3);
  EXPECT_EQ(v, FieldMatrix(f5, {{1, 1, 1}, {1, 2, 4}, {1, 3, 4}}));
  EXPECT_EQ(qtss::vandermonde(FieldVector(PrimeField(7), {1}), 1), FieldMatrix(PrimeField(7), {{1}}));
}

TEST(Vandermonde, RejectsBadNodes) {
  PrimeField f(7);
  EXPECT_EQ(kind_of([&] { qtss::vandermonde(FieldVector(f, {1, 2, 1}), 2); }), ErrorKind::DuplicateNode);
  EXPECT_EQ(kind_of([&] { qtss::vandermonde(FieldVector(f, {0, 2}), 2); }), ErrorKind::ZeroNode);
}

TEST(Vandermonde, EverySquareRowSelectionInvertibleSixByFour) {
  PrimeField f(7);
  const auto v = qtss::vandermonde(FieldVector(f, {1, 2, 3, 4, 5, 6}), 4);
  ASSERT_EQ(v.rows(), 6u);
  ASSERT_EQ(v.cols(), 4u);
  const auto cols = qtss::index_range(0, 4);
  int count = 0;
  for (const auto& rows : oracle::subsets(6, 4)) {
    const auto sub = qtss::submatrix(v, rows, cols);
    EXPECT_NE(oracle::determinant(to_dense(sub), 7), 0);
    EXPECT_TRUE(qtss::is_invertible(sub));
    ++count;
  }
  EXPECT_EQ(count, 15);
}

TEST(Submatrix, Extraction) {
  PrimeField f(5);
  const FieldMatrix v(f, {{1, 1, 1}, {1, 2, 4}, {1, 3, 4}});
  const auto all = qtss::index_range(0, 3);
  EXPECT_EQ(qtss::submatrix(v, all, all), v);
  const std::vector<std::size_t> rows{0, 2};
  EXPECT_EQ(qtss::submatrix(v, rows, all), FieldMatrix(f, {{1, 1, 1}, {1, 3, 4}}));
  // Trailing columns of a row selection.
  const std::vector<std::size_t> last{1, 2};
  EXPECT_EQ(qtss::submatrix(v, rows, last), FieldMatrix(f, {{1, 1}, {3, 4}}));
  const std::vector<std::size_t> bad{0, 3};
  EXPECT_EQ(kind_of([&] { qtss::submatrix(v, bad, all); }), ErrorKind::IndexOutOfRange);
  const std::vector<std::size_t> dup{1, 1};
  EXPECT_EQ(kind_of([&] { qtss::submatrix(v, dup, all); }), ErrorKind::IndexOutOfRange);
}

TEST(MatInv, Examples) {
  PrimeField f(5);
  EXPECT_EQ(qtss::mat_inv(FieldMatrix::identity(f, 3)), FieldMatrix::identity(f, 3));
  // Adjugate formula: det = 1, inverse = [[2, -1], [-1, 1]].
  const FieldMatrix a(f, {{1, 1}, {1, 2}});
  const auto inv = qtss::mat_inv(a);
  EXPECT_EQ(inv, FieldMatrix(f, {{2, 4}, {4, 1}}));
  EXPECT_EQ(qtss::mat_mul(a, inv), FieldMatrix::identity(f, 2));
  EXPECT_EQ(kind_of([&] { qtss::mat_inv(FieldMatrix(f, {{1, 1}, {2, 2}})); }), ErrorKind::Singular);
  EXPECT_EQ(kind_of([&] { qtss::mat_inv(FieldMatrix::zeros(f, 2, 3)); }), ErrorKind::DimensionMismatch);
}

TEST(MatInv, RandomMatricesAgreeWithDeterminantOracle) {
  std::mt19937_64 rng(7);
  for (std::uint32_t q : {2u, 3u, 5u, 7u, 11u, 13u}) {
    PrimeField f(q);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng() % 5;
      std::vector<qtss::Residue> e(n * n);
      for (auto& x : e) x = static_cast<qtss::Residue>(rng() % q);
      const FieldMatrix m(f, n, n, e);
      const bool invertible = oracle::determinant(to_dense(m), q) != 0;
      ASSERT_EQ(qtss::is_invertible(m), invertible);
      if (invertible) {
        const auto inv = qtss::mat_inv(m);
        EXPECT_EQ(qtss::mat_mul(m, inv), FieldMatrix::identity(f, n));
        EXPECT_EQ(qtss::mat_mul(inv, m), FieldMatrix::identity(f, n));
      }
    }
  }
}

TEST(MatVec, Examples) {
  PrimeField f(5);
  const FieldVector v(f, {3, 1, 4});
  EXPECT_EQ(qtss::mat_vec(FieldMatrix::identity(f, 3), v), v);
  const FieldMatrix van(f, {{1, 1, 1}, {1, 2, 4}, {1, 3, 4}});
  EXPECT_EQ(qtss::mat_vec(van, FieldVector(f, {1, 0, 0})), FieldVector(f, {1, 1, 1}));
  EXPECT_EQ(kind_of([&] { qtss::mat_vec(van, FieldVector(f, {1, 0})); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { qtss::mat_mul(van, FieldMatrix::zeros(f, 2, 2)); }), ErrorKind::DimensionMismatch);
}

TEST(MatMul, IntroCodewordMatchesExpandedSymbols) {
  // s = (1, 2), r = (3, 4): M has columns (s1, s2, r1) and (0, r1, r2).
  PrimeField f(5);
  const FieldMatrix van(f, {{1, 1, 1}, {1, 2, 4}, {1, 3, 4}});
  const FieldMatrix msg(f, {{1, 0}, {2, 3}, {3, 4}});
  const oracle::Int s1 = 1, s2 = 2, r1 = 3, r2 = 4;
  const std::vector<std::vector<oracle::Int>> expected{
      {s1 + s2 + r1, r1 + r2},
      {s1 + 2 * s2 + 4 * r1, 2 * r1 + 4 * r2},
      {s1 + 3 * s2 + 4 * r1, 3 * r1 + 4 * r2},
  };
  const auto c = qtss::mat_mul(van, msg);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(c(i, j), oracle::mod(expected[i][j], 5)) << i << "," << j;
  }
  EXPECT_EQ(c, FieldMatrix(f, {{1, 2}, {2, 2}, {4, 0}}));
}

TEST(Vandermonde, RandomNodeSetsAllRowSubsetsInvertible) {
  std::mt19937_64 rng(11);
  for (std::uint32_t q : {3u, 5u, 7u, 11u, 13u}) {
    PrimeField f(q);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<qtss::Residue> pool(q - 1);
      std::iota(pool.begin(), pool.end(), 1u);
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t n = 1 + rng() % (q - 1);
      const std::size_t d = 1 + rng() % n;
      const FieldVector nodes(f, std::vector<qtss::Residue>(pool.begin(), pool.begin() + n));
      const auto v = qtss::vandermonde(nodes, d);
      const auto cols = qtss::index_range(0, d);
      for (const auto& rows : oracle::subsets(n, d)) {
        EXPECT_TRUE(qtss::is_invertible(qtss::submatrix(v, rows, cols)));
      }
    }
  }
}

// Contiguous column blocks of a Vandermonde matrix are invertible whenever the
// chosen nodes are distinct and nonzero; the closed-form determinant is the oracle.
TEST(Vandermonde, ContiguousColumnBlocksExhaustive) {
  for (std::uint32_t q : {3u, 5u, 7u, 11u, 13u}) {
    PrimeField f(q);
    const std::size_t n = std::min<std::size_t>(q - 1, 11);
    std::vector<qtss::Residue> xs(n);
    std::iota(xs.begin(), xs.end(), 1u);
    const auto v = qtss::vandermonde(FieldVector(f, xs), n);
    for (std::size_t w = 1; w <= n; ++w) {
      for (const auto& rows : oracle::subsets(n, w)) {
        std::vector<oracle::Int> nodes;
        for (std::size_t r : rows) nodes.push_back(xs[r]);
        for (std::size_t c = 0; c + w <= n; ++c) {
          const auto block = qtss::submatrix(v, rows, qtss::index_range(c, w));
          ASSERT_NE(oracle::generalized_vandermonde_det(nodes, static_cast<int>(c), q), 0);
          ASSERT_TRUE(qtss::is_invertible(block)) << "q=" << q << " w=" << w << " c=" << c;
        }
      }
    }
  }
}

TEST(Vandermonde, ZeroNodeBreaksShiftedBlocks) {
  // With x = 0 allowed the shifted block [x, x^2] loses rank.
  PrimeField f(5);
  const FieldMatrix v(f, {{1, 0, 0}, {1, 1, 1}});
  const std::vector<std::size_t> rows{0, 1};
  EXPECT_TRUE(qtss::is_invertible(qtss::submatrix(v, rows, qtss::index_range(0, 2))));
  EXPECT_FALSE(qtss::is_invertible(qtss::submatrix(v, rows, qtss::index_range(1, 2))));
}

TEST(FieldVector, SliceConcatAndReduction) {
  PrimeField f(7);
  const FieldVector v(f, {8, 9, 10});
  EXPECT_EQ(v, FieldVector(f, {1, 2, 3}));
  EXPECT_EQ(v.slice(1, 2), FieldVector(f, {2, 3}));
  EXPECT_EQ(v.slice(0, 1).concat(v.slice(1, 2)), v);
  EXPECT_EQ(kind_of([&] { v.slice(2, 2); }), ErrorKind::IndexOutOfRange);
}

TEST(Rank, TransposeAndConcat) {
  PrimeField f(5);
  const FieldMatrix a(f, {{1, 2, 3}, {2, 4, 1}});
  EXPECT_EQ(qtss::transpose(a), FieldMatrix(f, {{1, 2}, {2, 4}, {3, 1}}));
  EXPECT_EQ(qtss::vconcat(a, FieldMatrix(f, {{0, 0, 1}})), FieldMatrix(f, {{1, 2, 3}, {2, 4, 1}, {0, 0, 1}}));
  EXPECT_EQ(kind_of([&] { qtss::vconcat(a, FieldMatrix(f, {{1}})); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(qtss::rank(FieldMatrix(f, {{1, 2}, {2, 4}})), 1u);
  EXPECT_EQ(qtss::rank(FieldMatrix::zeros(f, 3, 2)), 0u);
  EXPECT_EQ(qtss::rank(FieldMatrix::identity(f, 4)), 4u);
}

// |{m x}| = q^rank(m), counted by enumerating every x.
TEST(Rank, MatchesImageSizeOracle) {
  std::mt19937_64 rng(31);
  for (unsigned q : {2u, 3u, 5u}) {
    PrimeField f(q);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t rows = 1 + rng() % 3, cols = 1 + rng() % 3;
      std::vector<qtss::Residue> e(rows * cols);
      for (auto& x : e) x = static_cast<qtss::Residue>(rng() % (trial % 3 == 0 ? 2 : q));
      const FieldMatrix m(f, rows, cols, e);
      std::set<std::vector<qtss::Residue>> image;
      std::vector<qtss::Residue> x(cols, 0);
      while (true) {
        const auto y = qtss::mat_vec(m, FieldVector(f, x));
        image.insert(std::vector<qtss::Residue>(y.entries().begin(), y.entries().end()));
        std::size_t i = 0;
        while (i < cols && ++x[i] == q) x[i++] = 0;
        if (i == cols) break;
      }
      std::size_t size = 1;
      for (std::size_t r = 0; r < qtss::rank(m); ++r) size *= q;
      ASSERT_EQ(image.size(), size) << "q=" << q << " trial " << trial;
      ASSERT_EQ(qtss::rank(qtss::transpose(m)), qtss::rank(m));
    }
  }
}

TEST(Kernel, BasisIsAnnihilatedAndComplete) {
  std::mt19937_64 rng(32);
  for (unsigned q : {2u, 5u, 11u}) {
    PrimeField f(q);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t rows = 1 + rng() % 4, cols = 1 + rng() % 5;
      std::vector<qtss::Residue> e(rows * cols);
      for (auto& x : e) x = static_cast<qtss::Residue>(rng() % (trial % 2 ? q : 2));
      const FieldMatrix m(f, rows, cols, e);
      const auto k = qtss::kernel(m);
      ASSERT_EQ(k.rows(), cols);
      ASSERT_EQ(qtss::rank(m) + k.cols(), cols);
      if (k.cols() == 0) continue;
      ASSERT_TRUE(qtss::mat_mul(m, k).is_zero());
      ASSERT_EQ(qtss::rank(k), k.cols());
    }
  }
}

}  // namespace
