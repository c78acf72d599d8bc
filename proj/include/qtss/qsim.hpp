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
 * @file qsim.hpp
 * @brief Exact sparse simulation of multi-qudit pure states.
 *
 * A SparseState stores only the basis labels with nonzero amplitude, as a
 * flat digit array (branch-major) next to an amplitude array. The only
 * evolutions supported are basis permutations: invertible affine maps on a
 * register subset and controlled additions between disjoint subsets. Both
 * rewrite labels and leave the amplitude array untouched, so norms are
 * preserved bit-for-bit.
 *
 * Reduced states are held as sparse Hermitian matrices. Spectra are computed
 * per connected block of the sparsity pattern, which keeps the diagonal
 * reduced states that secrecy checks produce cheap at any dimension.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qtss/error.hpp"
#include "qtss/gf.hpp"
#include "qtss/staircase.hpp"

namespace qtss {

using Amplitude = std::complex<double>;
using BasisLabel = std::vector<Residue>;

namespace tolerance {
inline constexpr double kNormalization = 1e-12;
inline constexpr double kHermitian = 1e-12;
inline constexpr double kEquality = 1e-10;
inline constexpr double kPrune = 1e-14;
inline constexpr double kPsd = 1e-10;
}  // namespace tolerance

/// Default bound on q^t for a reduced state on t registers.
inline constexpr std::uint64_t kDefaultDimCap = 4096;
/// Largest connected block handed to the dense eigensolver.
inline constexpr std::size_t kDenseBlockCap = 2048;

namespace detail {

/// Neumaier-compensated running sum; long sums of tiny equal terms otherwise
/// drift past 1e-12.
class Sum {
 public:
  void add(double x) noexcept {
    const double t = total_ + x;
    comp_ += std::abs(total_) >= std::abs(x) ? (total_ - t) + x : (x - t) + total_;
    total_ = t;
  }
  double value() const noexcept { return total_ + comp_; }

 private:
  double total_ = 0.0;
  double comp_ = 0.0;
};

class ComplexSum {
 public:
  void add(std::complex<double> x) noexcept {
    re_.add(x.real());
    im_.add(x.imag());
  }
  std::complex<double> value() const noexcept { return {re_.value(), im_.value()}; }

 private:
  Sum re_;
  Sum im_;
};

inline void check_registers(std::span<const std::size_t> regs, std::size_t count) {
  for (std::size_t i = 0; i < regs.size(); ++i) {
    if (regs[i] >= count) {
      throw Error(ErrorKind::IndexOutOfRange, "register " + std::to_string(regs[i]) + " out of range");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (regs[i] == regs[j]) throw Error(ErrorKind::IndexOutOfRange, "register listed twice");
    }
  }
}

/// Checks that q^width fits a 64-bit packed key.
inline void check_packable(unsigned q, std::size_t width) {
  if (!checked_pow(q, width)) {
    throw Error(ErrorKind::LabelOverflow, std::to_string(q) + "^" + std::to_string(width) + " exceeds 64-bit labels");
  }
}

inline std::vector<std::size_t> complement(std::span<const std::size_t> regs, std::size_t count) {
  std::vector<bool> in(count, false);
  for (std::size_t r : regs) in[r] = true;
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < count; ++r) {
    if (!in[r]) out.push_back(r);
  }
  return out;
}

}  // namespace detail

class SparseState {
 public:
  using Digit = std::uint16_t;

  unsigned q() const noexcept { return q_; }
  std::size_t register_count() const noexcept { return registers_; }
  std::size_t branch_count() const noexcept { return amplitudes_.size(); }

  std::span<const Digit> label(std::size_t branch) const {
    return {digits_.data() + branch * registers_, registers_};
  }
  BasisLabel label_vector(std::size_t branch) const {
    auto l = label(branch);
    return {l.begin(), l.end()};
  }
  Amplitude amplitude(std::size_t branch) const { return amplitudes_[branch]; }
  std::span<const Amplitude> amplitudes() const noexcept { return amplitudes_; }

  double norm_squared() const {
    detail::Sum total;
    for (const auto& a : amplitudes_) total.add(std::norm(a));
    return total.value();
  }

  /// Packed label over `regs`, first listed register most significant.
  std::uint64_t key(std::size_t branch, std::span<const std::size_t> regs) const {
    const Digit* l = digits_.data() + branch * registers_;
    std::uint64_t key = 0;
    for (std::size_t r : regs) key = key * q_ + l[r];
    return key;
  }
  std::uint64_t key(std::size_t branch) const {
    const Digit* l = digits_.data() + branch * registers_;
    std::uint64_t key = 0;
    for (std::size_t r = 0; r < registers_; ++r) key = key * q_ + l[r];
    return key;
  }

  /// |digits>.
  static SparseState basis(unsigned q, std::span<const Residue> digits) {
    std::vector<Residue> copy(digits.begin(), digits.end());
    return from_branches(q, {{copy, Amplitude{1.0, 0.0}}});
  }
  static SparseState basis(unsigned q, std::initializer_list<Residue> digits) {
    std::vector<Residue> copy(digits);
    return basis(q, std::span<const Residue>(copy));
  }

  /// Sums weights on repeated labels, prunes |w| < 1e-14, then normalizes.
  static SparseState from_branches(unsigned q, const std::vector<std::pair<BasisLabel, Amplitude>>& branches) {
    if (branches.empty()) throw Error(ErrorKind::EmptyState, "no branches");
    const std::size_t registers = branches.front().first.size();
    std::map<BasisLabel, Amplitude> merged;
    for (const auto& [label, weight] : branches) {
      if (label.size() != registers) throw Error(ErrorKind::LengthMismatch, "labels of different lengths");
      for (Residue d : label) {
        if (d >= q) throw Error(ErrorKind::IndexOutOfRange, "digit " + std::to_string(d) + " >= q");
      }
      merged[label] += weight;
    }
    SparseState out(q, registers);
    for (const auto& [label, amp] : merged) {
      if (std::abs(amp) < tolerance::kPrune) continue;
      out.push(label, amp);
    }
    out.normalize();
    return out;
  }

  /// Builds a state from branches already known to be distinct and normalized.
  /// No merging or renormalization happens here.
  static SparseState from_unique(unsigned q, std::size_t registers, std::vector<Digit> digits,
                                 std::vector<Amplitude> amplitudes) {
    if (digits.size() != registers * amplitudes.size()) {
      throw Error(ErrorKind::LengthMismatch, "digit array does not match branch count");
    }
    if (amplitudes.empty()) throw Error(ErrorKind::EmptyState, "no branches");
    SparseState out(q, registers);
    out.digits_ = std::move(digits);
    out.amplitudes_ = std::move(amplitudes);
    return out;
  }

  /// One line per branch, "digits : re,im", sorted by label.
  std::string dump() const {
    std::vector<std::size_t> order(branch_count());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      auto la = label(a);
      auto lb = label(b);
      return std::lexicographical_compare(la.begin(), la.end(), lb.begin(), lb.end());
    });
    std::string out;
    char buf[96];
    for (std::size_t b : order) {
      auto l = label(b);
      for (std::size_t r = 0; r < l.size(); ++r) {
        if (q_ > 10 && r > 0) out += '.';
        out += std::to_string(l[r]);
      }
      auto clean = [](double x) { return x == 0.0 ? 0.0 : x; };
      std::snprintf(buf, sizeof buf, " : %.12f,%.12f\n", clean(amplitudes_[b].real()), clean(amplitudes_[b].imag()));
      out += buf;
    }
    return out;
  }

 private:
  SparseState(unsigned q, std::size_t registers) : q_(q), registers_(registers) {}

  void push(std::span<const Residue> label, Amplitude amp) {
    for (Residue d : label) digits_.push_back(static_cast<Digit>(d));
    amplitudes_.push_back(amp);
  }

  void normalize() {
    const double norm = std::sqrt(norm_squared());
    if (amplitudes_.empty() || norm < tolerance::kPrune) {
      throw Error(ErrorKind::EmptyState, "state vanishes after pruning");
    }
    for (auto& a : amplitudes_) a /= norm;
  }

  friend SparseState superpose(const std::vector<std::pair<SparseState, Amplitude>>& terms);
  friend SparseState tensor(const SparseState& a, const SparseState& b);
  friend class RegisterMap;
  friend SparseState apply_controlled_add(SparseState state, std::span<const std::size_t> sources,
                                          std::span<const std::size_t> targets, const FieldMatrix& coeff);
  friend std::vector<Amplitude> conditional_amplitudes(const SparseState&, std::span<const std::size_t>,
                                                       std::span<const Residue>);
  friend SparseState conditional_state(const SparseState&, std::span<const std::size_t>, std::span<const Residue>);

  unsigned q_ = 2;
  std::size_t registers_ = 0;
  std::vector<Digit> digits_;
  std::vector<Amplitude> amplitudes_;
};

/// Normalized linear combination; repeated labels interfere.
inline SparseState superpose(const std::vector<std::pair<SparseState, Amplitude>>& terms) {
  if (terms.empty()) throw Error(ErrorKind::EmptyState, "no terms");
  const unsigned q = terms.front().first.q();
  const std::size_t registers = terms.front().first.register_count();
  for (const auto& [state, coeff] : terms) {
    if (state.q() != q || state.register_count() != registers) {
      throw Error(ErrorKind::LengthMismatch, "superposed states differ in shape");
    }
  }
  detail::check_packable(q, registers);
  std::unordered_map<std::uint64_t, std::size_t> index;
  SparseState out(q, registers);
  for (const auto& [state, coeff] : terms) {
    if (coeff == Amplitude{}) continue;
    for (std::size_t b = 0; b < state.branch_count(); ++b) {
      const auto [it, fresh] = index.try_emplace(state.key(b), out.amplitudes_.size());
      if (fresh) {
        auto l = state.label(b);
        out.digits_.insert(out.digits_.end(), l.begin(), l.end());
        out.amplitudes_.push_back(coeff * state.amplitude(b));
      } else {
        out.amplitudes_[it->second] += coeff * state.amplitude(b);
      }
    }
  }
  SparseState pruned(q, registers);
  for (std::size_t b = 0; b < out.branch_count(); ++b) {
    if (std::abs(out.amplitudes_[b]) < tolerance::kPrune) continue;
    auto l = out.label(b);
    pruned.digits_.insert(pruned.digits_.end(), l.begin(), l.end());
    pruned.amplitudes_.push_back(out.amplitudes_[b]);
  }
  pruned.normalize();
  return pruned;
}

/// a on the leading registers, b on the trailing ones.
inline SparseState tensor(const SparseState& a, const SparseState& b) {
  if (a.q() != b.q()) throw Error(ErrorKind::LengthMismatch, "tensor of states with different q");
  SparseState out(a.q(), a.register_count() + b.register_count());
  for (std::size_t i = 0; i < a.branch_count(); ++i) {
    for (std::size_t j = 0; j < b.branch_count(); ++j) {
      auto la = a.label(i);
      auto lb = b.label(j);
      out.digits_.insert(out.digits_.end(), la.begin(), la.end());
      out.digits_.insert(out.digits_.end(), lb.begin(), lb.end());
      out.amplitudes_.push_back(a.amplitude(i) * b.amplitude(j));
    }
  }
  return out;
}

/// (packed label, amplitude) per branch, sorted by label.
using KeyedAmplitudes = std::vector<std::pair<std::uint64_t, Amplitude>>;

inline KeyedAmplitudes keyed_amplitudes(const SparseState& s) {
  detail::check_packable(s.q(), s.register_count());
  KeyedAmplitudes out;
  out.reserve(s.branch_count());
  for (std::size_t b = 0; b < s.branch_count(); ++b) out.emplace_back(s.key(b), s.amplitude(b));
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

/// Sum over shared labels of conj(a) b.
inline Amplitude inner_product(const KeyedAmplitudes& a, const KeyedAmplitudes& b) {
  detail::ComplexSum total;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      total.add(std::conj(i->second) * j->second);
      ++i;
      ++j;
    }
  }
  return total.value();
}

/// Sum over branches of conj(a) b, matching labels exactly.
inline Amplitude inner_product(const SparseState& a, const SparseState& b) {
  if (a.q() != b.q() || a.register_count() != b.register_count()) {
    throw Error(ErrorKind::LengthMismatch, "inner product of states with different shapes");
  }
  return inner_product(keyed_amplitudes(a), keyed_amplitudes(b));
}

/// True when both states hold the same labels with amplitudes within tol;
/// a label present in only one state must carry weight below tol.
inline bool approx_equal(const SparseState& a, const SparseState& b, double tol = tolerance::kEquality) {
  if (a.q() != b.q() || a.register_count() != b.register_count()) return false;
  detail::check_packable(a.q(), a.register_count());
  std::unordered_map<std::uint64_t, Amplitude> diff;
  for (std::size_t i = 0; i < a.branch_count(); ++i) diff[a.key(i)] += a.amplitude(i);
  for (std::size_t j = 0; j < b.branch_count(); ++j) diff[b.key(j)] -= b.amplitude(j);
  return std::all_of(diff.begin(), diff.end(), [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

/// A bijection x -> A x + b on the digits of `targets`, A invertible over F_q.
class RegisterMap {
 public:
  static RegisterMap affine(std::vector<std::size_t> targets, FieldMatrix linear, FieldVector offset) {
    if (!linear.is_square() || linear.rows() != targets.size() || offset.size() != targets.size() ||
        !(linear.field() == offset.field())) {
      throw Error(ErrorKind::DimensionMismatch, "affine map shape does not match its targets");
    }
    if (!is_invertible(linear)) throw Error(ErrorKind::SingularMap, "linear part is not invertible");
    return RegisterMap(std::move(targets), std::move(linear), std::move(offset));
  }

  static RegisterMap linear(std::vector<std::size_t> targets, FieldMatrix linear) {
    auto zero = FieldVector::zeros(linear.field(), linear.rows());
    return affine(std::move(targets), std::move(linear), std::move(zero));
  }

  /// Output position i receives the digit at input position perm[i].
  static RegisterMap permutation(std::vector<std::size_t> targets, const std::vector<std::size_t>& perm,
                                 PrimeField field) {
    if (perm.size() != targets.size()) throw Error(ErrorKind::DimensionMismatch, "permutation size mismatch");
    auto a = FieldMatrix::zeros(field, perm.size(), perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      if (perm[i] >= perm.size()) throw Error(ErrorKind::IndexOutOfRange, "permutation entry out of range");
      a.set(i, perm[i], 1);
    }
    return linear(std::move(targets), std::move(a));
  }

  const std::vector<std::size_t>& targets() const noexcept { return targets_; }
  const FieldMatrix& linear_part() const noexcept { return linear_; }
  const FieldVector& offset() const noexcept { return offset_; }

  /// y -> A^{-1}(y - b).
  RegisterMap inverse() const {
    auto inv = mat_inv(linear_);
    auto shift = mat_vec(inv, offset_);
    std::vector<Residue> neg(shift.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = linear_.field().neg(shift[i]);
    return RegisterMap(targets_, std::move(inv), FieldVector(linear_.field(), std::move(neg)));
  }

  SparseState apply(SparseState state) const {
    if (state.q() != linear_.field().modulus()) {
      throw Error(ErrorKind::DimensionMismatch, "map field does not match the state's q");
    }
    detail::check_registers(targets_, state.register_count());
    const std::size_t t = targets_.size();
    const std::size_t stride = state.registers_;
    const std::uint32_t q = state.q_;
    const auto a = linear_.entries();
    std::vector<std::uint32_t> x(t);
    for (std::size_t b = 0; b < state.branch_count(); ++b) {
      SparseState::Digit* l = state.digits_.data() + b * stride;
      for (std::size_t i = 0; i < t; ++i) x[i] = l[targets_[i]];
      for (std::size_t i = 0; i < t; ++i) {
        std::uint64_t acc = offset_[i];
        for (std::size_t j = 0; j < t; ++j) acc += static_cast<std::uint64_t>(a[i * t + j]) * x[j];
        l[targets_[i]] = static_cast<SparseState::Digit>(acc % q);
      }
    }
    return state;
  }

 private:
  RegisterMap(std::vector<std::size_t> targets, FieldMatrix linear, FieldVector offset)
      : targets_(std::move(targets)), linear_(std::move(linear)), offset_(std::move(offset)) {}

  std::vector<std::size_t> targets_;
  FieldMatrix linear_;
  FieldVector offset_;
};

inline SparseState apply_affine(SparseState state, const RegisterMap& map) { return map.apply(std::move(state)); }

/// t <- t + coeff * s on every branch, coeff of shape |targets| x |sources|.
inline SparseState apply_controlled_add(SparseState state, std::span<const std::size_t> sources,
                                        std::span<const std::size_t> targets, const FieldMatrix& coeff) {
  detail::check_registers(sources, state.register_count());
  detail::check_registers(targets, state.register_count());
  for (std::size_t s : sources) {
    if (std::find(targets.begin(), targets.end(), s) != targets.end()) {
      throw Error(ErrorKind::OverlappingRegisters, "register " + std::to_string(s) + " is both source and target");
    }
  }
  if (coeff.rows() != targets.size() || coeff.cols() != sources.size() || coeff.field().modulus() != state.q()) {
    throw Error(ErrorKind::DimensionMismatch, "controlled-add coefficient shape mismatch");
  }
  const std::size_t stride = state.registers_;
  const std::uint32_t q = state.q_;
  const auto c = coeff.entries();
  const std::size_t ns = sources.size();
  for (std::size_t b = 0; b < state.branch_count(); ++b) {
    SparseState::Digit* l = state.digits_.data() + b * stride;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      std::uint64_t acc = l[targets[i]];
      for (std::size_t j = 0; j < ns; ++j) acc += static_cast<std::uint64_t>(c[i * ns + j]) * l[sources[j]];
      l[targets[i]] = static_cast<SparseState::Digit>(acc % q);
    }
  }
  return state;
}

/// Amplitudes of the remaining registers, in branch order, on branches whose
/// `block` digits equal `values` (the unnormalized projection <values|psi>).
inline std::vector<Amplitude> conditional_amplitudes(const SparseState& state, std::span<const std::size_t> block,
                                                     std::span<const Residue> values) {
  detail::check_registers(block, state.register_count());
  if (values.size() != block.size()) throw Error(ErrorKind::DimensionMismatch, "values do not match block");
  std::vector<Amplitude> out;
  for (std::size_t b = 0; b < state.branch_count(); ++b) {
    auto l = state.label(b);
    bool hit = true;
    for (std::size_t i = 0; i < block.size() && hit; ++i) hit = l[block[i]] == values[i];
    if (hit) out.push_back(state.amplitude(b));
  }
  return out;
}

/// <values|_block psi> on the remaining registers (ascending order), left unnormalized.
inline SparseState conditional_state(const SparseState& state, std::span<const std::size_t> block,
                                     std::span<const Residue> values) {
  detail::check_registers(block, state.register_count());
  if (values.size() != block.size()) throw Error(ErrorKind::DimensionMismatch, "values do not match block");
  const auto rest = detail::complement(block, state.register_count());
  SparseState out(state.q(), rest.size());
  for (std::size_t b = 0; b < state.branch_count(); ++b) {
    auto l = state.label(b);
    bool hit = true;
    for (std::size_t i = 0; i < block.size() && hit; ++i) hit = l[block[i]] == values[i];
    if (!hit) continue;
    for (std::size_t r : rest) out.digits_.push_back(l[r]);
    out.amplitudes_.push_back(state.amplitude(b));
  }
  if (out.amplitudes_.empty()) throw Error(ErrorKind::EmptyState, "block never takes the requested values");
  return out;
}

/// Sparse Hermitian operator on t registers of dimension q each.
class DensityMatrix {
 public:
  struct Entry {
    std::uint64_t row;
    std::uint64_t col;
    Amplitude value;
  };

  /// Entries with repeated coordinates are summed.
  DensityMatrix(unsigned q, std::size_t registers, std::vector<Entry> entries) : q_(q), registers_(registers) {
    const auto dim = checked_pow(q, registers);
    if (!dim || *dim > (std::uint64_t{1} << 32)) {
      throw Error(ErrorKind::DimensionCapExceeded, "density matrix dimension exceeds 2^32");
    }
    dim_ = *dim;
    for (const auto& e : entries) {
      if (e.row >= dim_ || e.col >= dim_) throw Error(ErrorKind::IndexOutOfRange, "density entry out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (const auto& e : entries) {
      if (!entries_.empty() && entries_.back().row == e.row && entries_.back().col == e.col) {
        entries_.back().value += e.value;
      } else {
        entries_.push_back(e);
      }
    }
  }

  static DensityMatrix from_dense(unsigned q, std::size_t registers, const Eigen::MatrixXcd& m) {
    std::vector<Entry> entries;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (m(r, c) != Amplitude{}) {
          entries.push_back({static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c), m(r, c)});
        }
      }
    }
    DensityMatrix out(q, registers, std::move(entries));
    if (static_cast<std::uint64_t>(m.rows()) != out.dim_ || m.rows() != m.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "dense matrix does not match q^t");
    }
    return out;
  }

  /// |psi><psi|.
  static DensityMatrix projector(const SparseState& psi) {
    detail::check_packable(psi.q(), psi.register_count());
    std::vector<Entry> entries;
    entries.reserve(psi.branch_count() * psi.branch_count());
    for (std::size_t i = 0; i < psi.branch_count(); ++i) {
      for (std::size_t j = 0; j < psi.branch_count(); ++j) {
        entries.push_back({psi.key(i), psi.key(j), psi.amplitude(i) * std::conj(psi.amplitude(j))});
      }
    }
    return DensityMatrix(psi.q(), psi.register_count(), std::move(entries));
  }

  unsigned q() const noexcept { return q_; }
  std::size_t register_count() const noexcept { return registers_; }
  std::uint64_t dim() const noexcept { return dim_; }
  std::span<const Entry> entries() const noexcept { return entries_; }

  Amplitude at(std::uint64_t row, std::uint64_t col) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{row, col, {}}, [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    if (it != entries_.end() && it->row == row && it->col == col) return it->value;
    return {};
  }

  Amplitude trace() const {
    detail::ComplexSum t;
    for (const auto& e : entries_) {
      if (e.row == e.col) t.add(e.value);
    }
    return t.value();
  }

  /// Tr(rho^2) for Hermitian rho, i.e. the sum of |rho_ij|^2.
  double purity() const {
    detail::Sum p;
    for (const auto& e : entries_) p.add(std::norm(e.value));
    return p.value();
  }

  bool is_hermitian(double tol = tolerance::kHermitian) const {
    for (const auto& e : entries_) {
      if (std::abs(e.value - std::conj(at(e.col, e.row))) > tol) return false;
    }
    return true;
  }

  /// Eigenvalues of the support blocks, ascending. Indices that never appear
  /// in an entry contribute implicit zeros that are not listed.
  std::vector<double> eigenvalues() const {
    std::vector<double> out;
    if (std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) { return e.row == e.col; })) {
      for (const auto& e : entries_) out.push_back(e.value.real());
      std::sort(out.begin(), out.end());
      return out;
    }
    for_each_block([&](const std::vector<std::uint64_t>& idx, const std::vector<const Entry*>& block) {
      if (idx.size() == 1) {
        out.push_back(block.empty() ? 0.0 : block.front()->value.real());
        return;
      }
      Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(idx.size()),
                                                      static_cast<Eigen::Index>(idx.size()));
      for (const Entry* e : block) {
        const auto r = std::lower_bound(idx.begin(), idx.end(), e->row) - idx.begin();
        const auto c = std::lower_bound(idx.begin(), idx.end(), e->col) - idx.begin();
        dense(r, c) = e->value;
      }
      // Symmetrize so rounding asymmetries do not leak into the spectrum.
      const Eigen::MatrixXcd herm = 0.5 * (dense + dense.adjoint());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
      for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(solver.eigenvalues()(i));
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  bool is_psd(double tol = tolerance::kPsd) const {
    const auto ev = eigenvalues();
    return ev.empty() || ev.front() >= -tol;
  }

  /// Trace out everything except `keep` (positions among this matrix's registers).
  DensityMatrix partial_trace(std::span<const std::size_t> keep) const {
    detail::check_registers(keep, registers_);
    const auto traced = detail::complement(keep, registers_);
    std::vector<Entry> out;
    std::vector<std::uint32_t> rd(registers_), cd(registers_);
    auto unpack = [&](std::uint64_t key, std::vector<std::uint32_t>& digits) {
      for (std::size_t r = registers_; r-- > 0;) {
        digits[r] = static_cast<std::uint32_t>(key % q_);
        key /= q_;
      }
    };
    for (const auto& e : entries_) {
      unpack(e.row, rd);
      unpack(e.col, cd);
      bool diagonal = true;
      for (std::size_t r : traced) diagonal = diagonal && rd[r] == cd[r];
      if (!diagonal) continue;
      std::uint64_t row = 0, col = 0;
      for (std::size_t r : keep) {
        row = row * q_ + rd[r];
        col = col * q_ + cd[r];
      }
      out.push_back({row, col, e.value});
    }
    return DensityMatrix(q_, keep.size(), std::move(out));
  }

  Eigen::MatrixXcd dense() const {
    if (dim_ > kDenseBlockCap) throw Error(ErrorKind::DimensionCapExceeded, "dense view above block cap");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (const auto& e : entries_) m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
    return m;
  }

  friend DensityMatrix difference(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.q_ != b.q_ || a.registers_ != b.registers_) {
      throw Error(ErrorKind::DimensionMismatch, "density matrices of different dimension");
    }
    std::vector<Entry> entries(a.entries_.begin(), a.entries_.end());
    for (const auto& e : b.entries_) entries.push_back({e.row, e.col, -e.value});
    return DensityMatrix(a.q_, a.registers_, std::move(entries));
  }

 private:
  /// Calls fn(sorted indices, entries) for every connected block of the sparsity graph.
  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    std::vector<std::uint64_t> idx;
    idx.reserve(entries_.size() * 2);
    for (const auto& e : entries_) {
      idx.push_back(e.row);
      idx.push_back(e.col);
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    auto id = [&](std::uint64_t x) { return static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), x) - idx.begin()); };

    std::vector<std::size_t> parent(idx.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    for (const auto& e : entries_) {
      if (e.row == e.col) continue;
      const auto a = find(id(e.row));
      const auto b = find(id(e.col));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::pair<std::size_t, std::size_t>> by_root(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) by_root[i] = {find(i), i};
    std::sort(by_root.begin(), by_root.end());
    std::vector<std::pair<std::size_t, const Entry*>> entry_roots;
    entry_roots.reserve(entries_.size());
    for (const auto& e : entries_) entry_roots.push_back({find(id(e.row)), &e});
    std::stable_sort(entry_roots.begin(), entry_roots.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::uint64_t> block_idx;
    std::vector<const Entry*> block_entries;
    std::size_t e = 0;
    for (std::size_t i = 0; i < by_root.size();) {
      const std::size_t root = by_root[i].first;
      block_idx.clear();
      block_entries.clear();
      for (; i < by_root.size() && by_root[i].first == root; ++i) block_idx.push_back(idx[by_root[i].second]);
      for (; e < entry_roots.size() && entry_roots[e].first == root; ++e) block_entries.push_back(entry_roots[e].second);
      if (block_idx.size() > kDenseBlockCap) {
        throw Error(ErrorKind::DimensionCapExceeded,
                    "connected block of size " + std::to_string(block_idx.size()) + " exceeds dense cap");
      }
      fn(block_idx, block_entries);
    }
  }

  unsigned q_;
  std::size_t registers_;
  std::uint64_t dim_ = 1;
  std::vector<Entry> entries_;
};

/// Reduced density operator on `keep`, in the order listed.
inline DensityMatrix partial_trace(const SparseState& state, std::span<const std::size_t> keep,
                                   std::uint64_t dim_cap = kDefaultDimCap) {
  detail::check_registers(keep, state.register_count());
  const auto dim = checked_pow(state.q(), keep.size());
  if (!dim || *dim > dim_cap) {
    throw Error(ErrorKind::DimensionCapExceeded, "q^" + std::to_string(keep.size()) + " exceeds dimension cap " +
                                                     std::to_string(dim_cap));
  }
  const auto rest = detail::complement(keep, state.register_count());
  detail::check_packable(state.q(), rest.size());

  struct Item {
    std::uint64_t rest;
    std::uint64_t kept;
    Amplitude amp;
  };
  std::vector<Item> items;
  items.reserve(state.branch_count());
  for (std::size_t b = 0; b < state.branch_count(); ++b) {
    items.push_back({state.key(b, rest), state.key(b, keep), state.amplitude(b)});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.rest != b.rest ? a.rest < b.rest : a.kept < b.kept;
  });

  const bool dense = *dim <= 2048;
  std::vector<Amplitude> buffer(dense ? *dim * *dim : 0);
  std::unordered_map<std::uint64_t, Amplitude> sparse;
  std::size_t start = 0;
  while (start < items.size()) {
    std::size_t stop = start;
    while (stop < items.size() && items[stop].rest == items[start].rest) ++stop;
    for (std::size_t i = start; i < stop; ++i) {
      for (std::size_t j = start; j < stop; ++j) {
        const Amplitude v = items[i].amp * std::conj(items[j].amp);
        if (dense) {
          buffer[items[i].kept * *dim + items[j].kept] += v;
        } else {
          sparse[(items[i].kept << 32) | items[j].kept] += v;
        }
      }
    }
    start = stop;
  }

  std::vector<DensityMatrix::Entry> entries;
  if (dense) {
    for (std::uint64_t r = 0; r < *dim; ++r) {
      for (std::uint64_t c = 0; c < *dim; ++c) {
        if (buffer[r * *dim + c] != Amplitude{}) entries.push_back({r, c, buffer[r * *dim + c]});
      }
    }
  } else {
    entries.reserve(sparse.size());
    for (const auto& [key, v] : sparse) entries.push_back({key >> 32, key & 0xffffffffu, v});
  }
  return DensityMatrix(state.q(), keep.size(), std::move(entries));
}

/// <psi|rho|psi>, clamped to [0, 1].
inline double fidelity(const DensityMatrix& rho, const SparseState& psi) {
  if (rho.q() != psi.q() || rho.register_count() != psi.register_count()) {
    throw Error(ErrorKind::DimensionMismatch, "state and density matrix differ in shape");
  }
  std::unordered_map<std::uint64_t, Amplitude> amp;
  for (std::size_t b = 0; b < psi.branch_count(); ++b) amp.emplace(psi.key(b), psi.amplitude(b));
  detail::ComplexSum total;
  for (const auto& e : rho.entries()) {
    auto i = amp.find(e.row);
    if (i == amp.end()) continue;
    auto j = amp.find(e.col);
    if (j == amp.end()) continue;
    total.add(std::conj(i->second) * e.value * j->second);
  }
  return std::clamp(total.value().real(), 0.0, 1.0);
}

/// Half the trace norm of rho - sigma, clamped to [0, 1].
inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  const auto delta = difference(rho, sigma);
  detail::Sum total;
  for (double ev : delta.eigenvalues()) total.add(std::abs(ev));
  return std::clamp(0.5 * total.value(), 0.0, 1.0);
}

/// Does `state` factor as reference (on `block`) tensor something?
/// Tested as fidelity of the block's reduced state with the reference, plus
/// purity of that reduced state (which equals the complement's purity).
inline bool factor_check(const SparseState& state, std::span<const std::size_t> block, const SparseState& reference,
                         std::uint64_t dim_cap = kDefaultDimCap) {
  if (reference.register_count() != block.size() || reference.q() != state.q()) {
    throw Error(ErrorKind::DimensionMismatch, "reference does not match the block");
  }
  const auto rho = partial_trace(state, block, dim_cap);
  const double f = fidelity(rho, reference);
  const double purity = rho.purity();
  return f >= 1.0 - tolerance::kEquality && std::abs(purity - 1.0) <= tolerance::kEquality;
}

}  // namespace qtss
