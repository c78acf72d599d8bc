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
 * @file affine.hpp
 * @brief Symbolic tracking of the encoded states through recovery.
 *
 * The encoding of a basis secret s is the uniform superposition
 *
 *     |E_s> = q^{-t/2} sum_r |S s + R r + c>
 *
 * over r in F_q^t, and every combiner step is an affine permutation of basis
 * labels. Tracking the register-label matrix (S | R | c) therefore describes
 * the state of every secret at once, at any q^t. Recovery and secrecy reduce
 * to rank conditions on blocks of that matrix.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "qtss/gf.hpp"
#include "qtss/protocol.hpp"
#include "qtss/staircase.hpp"

namespace qtss {

class AffineEnsemble {
 public:
  /// Register labels S s + R r + c; S is registers x secret_len, R is registers x random_len.
  AffineEnsemble(FieldMatrix secret_part, FieldMatrix random_part, FieldVector constant)
      : s_(std::move(secret_part)), r_(std::move(random_part)), c_(std::move(constant)) {
    if (s_.rows() != r_.rows() || s_.rows() != c_.size() || !(s_.field() == r_.field()) ||
        !(s_.field() == c_.field())) {
      throw Error(ErrorKind::DimensionMismatch, "label blocks disagree in shape or field");
    }
  }

  /// The dealer's encoding, read off encode_classical on unit inputs.
  static AffineEnsemble from_encoding(const SchemeParams& p) {
    const auto& f = p.field();
    const std::size_t regs = p.register_count();
    const std::size_t t = p.randomness_length();
    auto column = [&](const FieldVector& s, const FieldVector& r) {
      const auto c = encode_classical(s, split_randomness(r, p), p);
      return std::vector<Residue>(c.entries().begin(), c.entries().end());
    };
    auto secret = FieldMatrix::zeros(f, regs, p.m());
    auto random = FieldMatrix::zeros(f, regs, t);
    const auto zero_s = FieldVector::zeros(f, p.m());
    const auto zero_r = FieldVector::zeros(f, t);
    for (std::size_t j = 0; j < p.m(); ++j) {
      auto e = zero_s;
      e.set(j, 1);
      const auto col = column(e, zero_r);
      for (std::size_t i = 0; i < regs; ++i) secret.set(i, j, col[i]);
    }
    for (std::size_t j = 0; j < t; ++j) {
      auto e = zero_r;
      e.set(j, 1);
      const auto col = column(zero_s, e);
      for (std::size_t i = 0; i < regs; ++i) random.set(i, j, col[i]);
    }
    return {std::move(secret), std::move(random), FieldVector(f, column(zero_s, zero_r))};
  }

  const PrimeField& field() const noexcept { return s_.field(); }
  std::size_t register_count() const noexcept { return s_.rows(); }
  std::size_t secret_length() const noexcept { return s_.cols(); }
  std::size_t random_length() const noexcept { return r_.cols(); }
  const FieldMatrix& secret_part() const noexcept { return s_; }
  const FieldMatrix& random_part() const noexcept { return r_; }
  const FieldVector& constant() const noexcept { return c_; }

  FieldMatrix secret_rows(std::span<const std::size_t> regs) const { return submatrix(s_, regs, columns(s_.cols())); }
  FieldMatrix random_rows(std::span<const std::size_t> regs) const { return submatrix(r_, regs, columns(r_.cols())); }

  /// Label of branch r for secret s.
  std::vector<Residue> label(const FieldVector& s, const FieldVector& r) const {
    const auto a = mat_vec(s_, s);
    const auto b = mat_vec(r_, r);
    std::vector<Residue> out(register_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = field().add(field().add(a[i], b[i]), c_[i]);
    return out;
  }

  /// Distinct r give distinct labels, so every |E_s> has q^t branches of equal weight.
  bool injective() const { return rank(r_) == r_.cols(); }

  /// Applies one combiner step; affine steps must be invertible.
  void apply(const TranscriptOp& op) {
    const auto& f = field();
    if (op.kind == TranscriptOp::Kind::Affine) {
      if (!is_invertible(op.coefficients)) throw Error(ErrorKind::SingularMap, "affine step is not invertible");
      const auto rows = snapshot(op.targets);
      for (std::size_t i = 0; i < op.targets.size(); ++i) {
        for (std::size_t c = 0; c < rows.front().size(); ++c) {
          std::uint64_t acc = c + 1 == rows.front().size() && i < op.offset.size() ? op.offset[i] : 0;
          for (std::size_t j = 0; j < op.targets.size(); ++j) {
            acc += std::uint64_t{op.coefficients(i, j)} * rows[j][c];
          }
          store(op.targets[i], c, static_cast<Residue>(acc % f.modulus()));
        }
      }
    } else {
      const auto src = snapshot(op.sources);
      for (std::size_t i = 0; i < op.targets.size(); ++i) {
        const auto current = snapshot(std::vector<std::size_t>{op.targets[i]}).front();
        for (std::size_t c = 0; c < current.size(); ++c) {
          std::uint64_t acc = current[c];
          for (std::size_t j = 0; j < op.sources.size(); ++j) acc += std::uint64_t{op.coefficients(i, j)} * src[j][c];
          store(op.targets[i], c, static_cast<Residue>(acc % f.modulus()));
        }
      }
    }
  }

  void replay(const RecoveryTranscript& t) {
    for (const auto& op : t.operations) apply(op);
  }

 private:
  static std::vector<std::size_t> columns(std::size_t n) { return index_range(0, n); }

  /// Rows of (S | R | c) for `regs`.
  std::vector<std::vector<Residue>> snapshot(const std::vector<std::size_t>& regs) const {
    std::vector<std::vector<Residue>> out;
    for (std::size_t reg : regs) {
      if (reg >= register_count()) throw Error(ErrorKind::IndexOutOfRange, "register out of range");
      std::vector<Residue> row;
      for (std::size_t c = 0; c < s_.cols(); ++c) row.push_back(s_(reg, c));
      for (std::size_t c = 0; c < r_.cols(); ++c) row.push_back(r_(reg, c));
      row.push_back(c_[reg]);
      out.push_back(std::move(row));
    }
    return out;
  }

  void store(std::size_t reg, std::size_t c, Residue value) {
    if (c < s_.cols()) {
      s_.set(reg, c, value);
    } else if (c < s_.cols() + r_.cols()) {
      r_.set(reg, c - s_.cols(), value);
    } else {
      c_.set(reg, value);
    }
  }

  FieldMatrix s_;
  FieldMatrix r_;
  FieldVector c_;
};

/// A dealt state with the single branch s = 0, r = 0; enough to obtain a recovery transcript.
inline DealtState transcript_skeleton(const SchemeParams& p, unsigned retained) {
  std::vector<Residue> zeros(p.register_count(), 0);
  std::vector<unsigned> all(p.n());
  for (unsigned i = 0; i < p.n(); ++i) all[i] = i + 1;
  DealtState dealt{p, SparseState::basis(p.q(), zeros), ShareLayout(p), std::move(all)};
  return retained < p.n() ? convert_to_mixed(std::move(dealt), retained) : dealt;
}

namespace detail {

/// True when every column of `b` lies in the column span of `a`.
inline bool spans(const FieldMatrix& a, const FieldMatrix& b) { return rank(hconcat(a, b)) == rank(a); }

}  // namespace detail

/// What the label matrix says about the state after recovery into `output`.
struct RecoveryAlgebra {
  /// Output labels equal s on every branch: the output block is (I | 0 | 0).
  bool output_is_secret = false;
  /// The leftover registers carry the same superposition for every secret.
  bool junk_independent = false;
  /// Rank of the randomness acting on the output block.
  std::size_t output_noise_rank = 0;
  /// Rows P with P x = 0 exactly on the column span of the leftover randomness.
  FieldMatrix fingerprint;

  bool recovered() const noexcept { return output_is_secret && junk_independent; }
};

inline RecoveryAlgebra recovery_algebra(const AffineEnsemble& e, const std::vector<std::size_t>& output) {
  const auto& f = e.field();
  const auto rest = detail::complement(output, e.register_count());
  const auto s_out = e.secret_rows(output);
  const auto r_out = e.random_rows(output);
  const auto s_rest = e.secret_rows(rest);
  const auto r_rest = e.random_rows(rest);
  RecoveryAlgebra out{false, false, rank(r_out), FieldMatrix::zeros(f, 0, e.secret_length())};
  bool constant_zero = true;
  for (std::size_t reg : output) constant_zero = constant_zero && e.constant()[reg] == 0;
  const auto id = FieldMatrix::identity(f, output.size());
  out.output_is_secret = output.size() == e.secret_length() && r_out.is_zero() && constant_zero &&
                         std::ranges::equal(s_out.entries(), id.entries());
  out.junk_independent = detail::spans(r_rest, s_rest);
  out.fingerprint = mat_mul(transpose(kernel(transpose(r_rest))), s_rest);
  return out;
}

/// <s| rho_out |s> for basis secret s: the chance that the output block reads s.
inline double basis_fidelity(const AffineEnsemble& e, const std::vector<std::size_t>& output, const FieldVector& s) {
  const auto& f = e.field();
  if (output.size() != s.size()) throw Error(ErrorKind::LengthMismatch, "output block and secret differ in length");
  const auto r_out = e.random_rows(output);
  const auto image = mat_vec(e.secret_rows(output), s);
  auto gap = FieldMatrix::zeros(f, output.size(), 1);
  for (std::size_t i = 0; i < output.size(); ++i) {
    gap.set(i, 0, f.sub(f.sub(s[i], image[i]), e.constant()[output[i]]));
  }
  if (!detail::spans(r_out, gap)) return 0.0;
  return std::pow(static_cast<double>(f.modulus()), -static_cast<double>(rank(r_out)));
}

/// Fidelity with the input for the secret sum_s alpha_s |s>, alpha indexed by the packed
/// label of s (first digit most significant). Requires output_is_secret.
///
/// Two secrets leave the same leftover state exactly when their fingerprints agree, and
/// orthogonal ones otherwise, so F = sum over fingerprint classes of (class weight)^2.
inline double superposition_fidelity(const RecoveryAlgebra& a, const PrimeField& f, std::size_t secret_len,
                                     std::span<const Amplitude> alpha) {
  if (!a.output_is_secret) throw Error(ErrorKind::DimensionMismatch, "the output block does not hold the secret");
  std::map<std::vector<Residue>, double> weight;
  std::vector<Residue> digits(secret_len, 0);
  for (std::size_t index = 0; index < alpha.size(); ++index) {
    std::size_t rest = index;
    for (std::size_t i = secret_len; i-- > 0;) {
      digits[i] = static_cast<Residue>(rest % f.modulus());
      rest /= f.modulus();
    }
    const auto key = mat_vec(a.fingerprint, FieldVector(f, digits));
    weight[std::vector<Residue>(key.entries().begin(), key.entries().end())] += std::norm(alpha[index]);
  }
  double total = 0.0;
  for (const auto& [key, w] : weight) total += w * w;
  return total;
}

/// What the label matrix says about the reduced state of a register block A.
struct SecrecyAlgebra {
  /// The complement pins down s on each branch, so secrets never interfere on A.
  bool rest_determines_secret = false;
  /// The secret only translates labels on A within the span of the randomness.
  bool secret_hidden_on_block = false;
  /// The reduced state is I / q^{|A|}.
  bool maximally_mixed = false;

  bool secret() const noexcept { return rest_determines_secret && secret_hidden_on_block; }
};

/// Reduced state of A equal for every secret iff both conditions hold.
inline SecrecyAlgebra secrecy_algebra(const AffineEnsemble& e, const std::vector<std::size_t>& block) {
  const auto rest = detail::complement(block, e.register_count());
  const auto s_a = e.secret_rows(block);
  const auto r_a = e.random_rows(block);
  const auto s_rest = e.secret_rows(rest);
  const auto r_rest = e.random_rows(rest);
  SecrecyAlgebra out;
  out.rest_determines_secret = rank(hconcat(s_rest, r_rest)) == e.secret_length() + rank(r_rest);
  out.secret_hidden_on_block = detail::spans(r_a, s_a);
  out.maximally_mixed = e.injective() && rank(r_a) == block.size() && rank(r_rest) == e.random_length();
  return out;
}

}  // namespace qtss
