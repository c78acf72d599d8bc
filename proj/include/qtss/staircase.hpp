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
 * @file staircase.hpp
 * @brief Scheme parameters and the classical staircase layout.
 *
 * A ((k, 2k-1, d)) scheme shares m = d - k + 1 qudits. The message matrix M
 * is d x m: column 1 stacks the secret on top of the first randomness block
 * r_1 = (u, v); column j >= 2 is zero in its first m - 1 rows, then carries
 * v_{j-1} followed by the randomness block r_j. Participant i holds row i of
 * C = V M where V is the n x d Vandermonde matrix on the nodes x_i = i.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qtss/error.hpp"
#include "qtss/gf.hpp"

namespace qtss {

inline constexpr std::uint64_t kDefaultBranchCap = 10'000'000;

/// q^e, or nullopt past 2^64.
inline std::optional<std::uint64_t> checked_pow(std::uint64_t q, std::uint64_t e) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (q != 0 && out > std::numeric_limits<std::uint64_t>::max() / q) return std::nullopt;
    out *= q;
  }
  return out;
}

class SchemeParams {
 public:
  unsigned k() const noexcept { return k_; }
  unsigned n() const noexcept { return n_; }
  unsigned d() const noexcept { return d_; }
  unsigned q() const noexcept { return field_.modulus(); }
  /// Secret length in qudits, d - k + 1.
  unsigned m() const noexcept { return d_ - k_ + 1; }

  const PrimeField& field() const noexcept { return field_; }
  const FieldVector& nodes() const noexcept { return nodes_; }
  /// V_{n,d}.
  const FieldMatrix& generator() const noexcept { return generator_; }

  std::size_t register_count() const noexcept { return std::size_t{n_} * m(); }
  std::size_t randomness_length() const noexcept { return std::size_t{m()} * (k_ - 1); }
  std::size_t u_length() const noexcept { return k_ - m(); }
  std::size_t v_length() const noexcept { return m() - 1; }

  /// q^{m(k-1)}: branches of one encoded basis state.
  std::optional<std::uint64_t> branches_per_secret() const { return checked_pow(q(), randomness_length()); }

  friend SchemeParams make_params(unsigned k, unsigned d, unsigned q);
  friend SchemeParams make_params(unsigned k, unsigned d, unsigned q, const std::vector<Residue>& nodes);

  friend bool operator==(const SchemeParams& a, const SchemeParams& b) {
    return a.k_ == b.k_ && a.d_ == b.d_ && a.field_ == b.field_ && a.nodes_ == b.nodes_;
  }

  std::string to_string() const {
    return "((" + std::to_string(k_) + "," + std::to_string(n_) + "," + std::to_string(d_) +
           "), q=" + std::to_string(q()) + ")";
  }

 private:
  SchemeParams(unsigned k, unsigned d, PrimeField field, FieldVector nodes, FieldMatrix generator)
      : k_(k), n_(2 * k - 1), d_(d), field_(field), nodes_(std::move(nodes)), generator_(std::move(generator)) {}

  unsigned k_;
  unsigned n_;
  unsigned d_;
  PrimeField field_;
  FieldVector nodes_;
  FieldMatrix generator_;
};

/// Validates (k, d, q) with custom evaluation nodes (one per participant).
/// A zero or repeated node leaves some recovery block singular.
inline SchemeParams make_params(unsigned k, unsigned d, unsigned q, const std::vector<Residue>& nodes) {
  if (k < 1) throw Error(ErrorKind::InvalidThreshold, "threshold k must be at least 1");
  const unsigned n = 2 * k - 1;
  if (d < k || d > n) {
    throw Error(ErrorKind::InvalidThreshold,
                "need k <= d <= 2k-1, got k=" + std::to_string(k) + " d=" + std::to_string(d));
  }
  PrimeField field(q);
  if (q <= n) {
    throw Error(ErrorKind::ModulusTooSmall, "need q > n, got q=" + std::to_string(q) + " n=" + std::to_string(n));
  }
  if (nodes.size() != n) throw Error(ErrorKind::NodesUnsuitable, "need one node per participant");
  FieldVector node_vec(field, nodes);
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes[i] >= q || node_vec[i] == 0) throw Error(ErrorKind::NodesUnsuitable, "nodes must be nonzero residues");
    for (std::size_t j = 0; j < i; ++j) {
      if (node_vec[i] == node_vec[j]) throw Error(ErrorKind::NodesUnsuitable, "nodes must be distinct");
    }
  }
  auto generator = vandermonde(node_vec, d);
  return SchemeParams(k, d, field, std::move(node_vec), std::move(generator));
}

/// Nodes x_i = i for i = 1..n.
inline SchemeParams make_params(unsigned k, unsigned d, unsigned q) {
  if (k < 1) throw Error(ErrorKind::InvalidThreshold, "threshold k must be at least 1");
  std::vector<Residue> nodes(2 * k - 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = static_cast<Residue>(i + 1);
  return make_params(k, d, q, nodes);
}

/// r = (r_1, ..., r_m), each of length k-1; r_1 = (u, v).
struct RandomnessSplit {
  std::vector<FieldVector> r_blocks;
  FieldVector u;
  FieldVector v;

  FieldVector flat() const {
    FieldVector out = FieldVector::zeros(u.field(), 0);
    for (const auto& block : r_blocks) out = out.concat(block);
    return out;
  }
};

inline RandomnessSplit split_randomness(const FieldVector& r, const SchemeParams& p) {
  if (!(r.field() == p.field()) || r.size() != p.randomness_length()) {
    throw Error(ErrorKind::DimensionMismatch, "randomness must have length m(k-1) = " +
                                                  std::to_string(p.randomness_length()));
  }
  const std::size_t block = p.k() - 1;
  std::vector<FieldVector> blocks;
  blocks.reserve(p.m());
  for (std::size_t j = 0; j < p.m(); ++j) blocks.push_back(r.slice(j * block, block));
  FieldVector u = blocks.front().slice(0, p.u_length());
  FieldVector v = blocks.front().slice(p.u_length(), p.v_length());
  return {std::move(blocks), std::move(u), std::move(v)};
}

/// Participant registers: participant i (1-based) owns registers (i-1)m .. im-1,
/// and its j-th register (1-based) holds c_{i,j}.
struct ShareLayout {
  unsigned n;
  unsigned m;

  explicit ShareLayout(const SchemeParams& p) : n(p.n()), m(p.m()) {}

  std::size_t register_of(unsigned participant, unsigned column) const {
    if (participant < 1 || participant > n || column < 1 || column > m) {
      throw Error(ErrorKind::IndexOutOfRange, "participant/column out of range");
    }
    return std::size_t{participant - 1} * m + (column - 1);
  }

  std::vector<std::size_t> share_registers(unsigned participant) const {
    std::vector<std::size_t> out;
    for (unsigned j = 1; j <= m; ++j) out.push_back(register_of(participant, j));
    return out;
  }

  std::vector<std::size_t> registers_of(const std::vector<unsigned>& participants) const {
    std::vector<std::size_t> out;
    for (unsigned i : participants) {
      auto regs = share_registers(i);
      out.insert(out.end(), regs.begin(), regs.end());
    }
    return out;
  }
};

/// The d x m staircase message matrix.
inline FieldMatrix build_message_matrix(const FieldVector& s, const RandomnessSplit& split, const SchemeParams& p) {
  const unsigned m = p.m();
  if (!(s.field() == p.field()) || s.size() != m || split.r_blocks.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "secret/randomness lengths do not match the scheme");
  }
  for (const auto& block : split.r_blocks) {
    if (block.size() != p.k() - 1) throw Error(ErrorKind::DimensionMismatch, "randomness block length != k-1");
  }
  if (split.u.size() != p.u_length() || split.v.size() != p.v_length()) {
    throw Error(ErrorKind::DimensionMismatch, "u/v split lengths do not match the scheme");
  }
  auto out = FieldMatrix::zeros(p.field(), p.d(), m);
  for (std::size_t i = 0; i < m; ++i) out.set(i, 0, s[i]);
  for (std::size_t i = 0; i + 1 < p.k(); ++i) out.set(m + i, 0, split.r_blocks[0][i]);
  for (std::size_t j = 1; j < m; ++j) {
    out.set(m - 1, j, split.v[j - 1]);
    for (std::size_t i = 0; i + 1 < p.k(); ++i) out.set(m + i, j, split.r_blocks[j][i]);
  }
  return out;
}

/// C = V_{n,d} M; row i-1 is participant i's symbol tuple.
inline FieldMatrix encode_classical(const FieldVector& s, const RandomnessSplit& split, const SchemeParams& p) {
  return mat_mul(p.generator(), build_message_matrix(s, split, p));
}

struct Codeword {
  FieldVector randomness;
  FieldMatrix symbols;
};

/// All q^{m(k-1)} codewords of a fixed secret, in odometer order of r (last entry fastest).
///
/// C is affine in r, so the iterator keeps the current codeword and adds the
/// column C(0, e_t) whenever digit t ticks; a wrap q-1 -> 0 is also one
/// addition because q C(0, e_t) = 0.
class CodewordRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Codeword;
    using difference_type = std::ptrdiff_t;
    using pointer = const Codeword*;
    using reference = const Codeword&;

    iterator() = default;

    reference operator*() const {
      current_.emplace(Codeword{FieldVector(range_->params_.field(), digits_),
                                FieldMatrix(range_->params_.field(), range_->params_.n(), range_->params_.m(),
                                            symbols_)});
      return *current_;
    }
    pointer operator->() const { return &**this; }

    /// The flattened codeword (participant-major) without allocating a Codeword.
    const std::vector<Residue>& symbols() const noexcept { return symbols_; }
    const std::vector<Residue>& randomness() const noexcept { return digits_; }

    iterator& operator++() {
      const PrimeField& f = range_->params_.field();
      const std::size_t len = digits_.size();
      std::size_t t = len;
      while (t > 0) {
        --t;
        const auto& step = range_->unit_columns_[t];
        for (std::size_t i = 0; i < symbols_.size(); ++i) symbols_[i] = f.add(symbols_[i], step[i]);
        digits_[t] = (digits_[t] + 1) % f.modulus();
        if (digits_[t] != 0) {
          ++index_;
          return *this;
        }
      }
      index_ = range_->count_;
      return *this;
    }
    void operator++(int) { ++*this; }

    friend bool operator==(const iterator& a, const iterator& b) { return a.index_ == b.index_; }

   private:
    friend class CodewordRange;
    iterator(const CodewordRange* range, std::uint64_t index) : range_(range), index_(index) {
      if (index_ < range_->count_) {
        digits_.assign(range_->params_.randomness_length(), 0);
        symbols_ = range_->base_;
      }
    }

    const CodewordRange* range_ = nullptr;
    std::uint64_t index_ = 0;
    std::vector<Residue> digits_;
    std::vector<Residue> symbols_;
    mutable std::optional<Codeword> current_;
  };

  CodewordRange(const FieldVector& s, const SchemeParams& p, std::uint64_t cap = kDefaultBranchCap) : params_(p) {
    const auto count = p.branches_per_secret();
    if (!count || *count > cap) {
      throw Error(ErrorKind::EnumerationTooLarge,
                  "q^{m(k-1)} = " + std::to_string(p.q()) + "^" + std::to_string(p.randomness_length()) +
                      " branches exceeds cap " + std::to_string(cap));
    }
    count_ = *count;
    const auto zero = FieldVector::zeros(p.field(), p.randomness_length());
    const auto base = encode_classical(s, split_randomness(zero, p), p);
    base_.assign(base.entries().begin(), base.entries().end());
    const auto zero_secret = FieldVector::zeros(p.field(), p.m());
    for (std::size_t t = 0; t < p.randomness_length(); ++t) {
      auto unit = zero;
      unit.set(t, 1);
      const auto column = encode_classical(zero_secret, split_randomness(unit, p), p);
      unit_columns_.emplace_back(column.entries().begin(), column.entries().end());
    }
  }

  std::uint64_t size() const noexcept { return count_; }
  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, count_); }

 private:
  SchemeParams params_;
  std::uint64_t count_ = 0;
  std::vector<Residue> base_;
  std::vector<std::vector<Residue>> unit_columns_;
};

inline CodewordRange enumerate_codewords(const FieldVector& s, const SchemeParams& p,
                                         std::uint64_t cap = kDefaultBranchCap) {
  return CodewordRange(s, p, cap);
}

}  // namespace qtss
