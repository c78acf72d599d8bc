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
 * @file protocol.hpp
 * @brief Dealer, combiners, secrecy verifier and communication-cost bounds.
 *
 * The combiner only ever sees the registers the participants send it. A
 * Combiner session is constructed from those registers and rejects any
 * operation that touches anything else, so a recovery cannot read the
 * environment by accident.
 *
 * d-recovery uses the first register of every share in D:
 *   1. V_D^{-1} on the d received registers gives (s, u, v);
 *   2. u <- V_E (s, u, v), which disentangles s.
 * k-recovery uses all m registers of every share in K:
 *   1. for columns j >= 2, the last-k-columns block of V_K is inverted, giving (v_{j-1}, r_j);
 *   2. the v-part V_{K,fbar} v is subtracted from column 1;
 *   3. the first-k-columns block V_{K,f} is inverted on column 1, giving (s, u);
 *   4. every r_j (j >= 2) becomes V_L(0, v_{j-1}, r_j), then r_1 = (u, v) becomes V_L(s, r_1).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qtss/error.hpp"
#include "qtss/gf.hpp"
#include "qtss/qsim.hpp"
#include "qtss/staircase.hpp"

namespace qtss {

struct DealtState {
  SchemeParams params;
  SparseState state;
  ShareLayout layout;
  /// Participants whose shares still exist; all n unless converted to a mixed scheme.
  std::vector<unsigned> retained;

  std::size_t retained_count() const noexcept { return retained.size(); }
  bool is_retained(unsigned participant) const {
    return std::find(retained.begin(), retained.end(), participant) != retained.end();
  }
};

/// Amplitude-weighted encoding of every basis component of `secret`.
inline DealtState deal(const SparseState& secret, const SchemeParams& p, std::uint64_t branch_cap = kDefaultBranchCap) {
  if (secret.q() != p.q() || secret.register_count() != p.m()) {
    throw Error(ErrorKind::LengthMismatch, "secret must be " + std::to_string(p.m()) + " qudits of dimension " +
                                               std::to_string(p.q()));
  }
  if (std::abs(secret.norm_squared() - 1.0) > tolerance::kNormalization) {
    throw Error(ErrorKind::InvalidParams, "secret is not normalized");
  }
  const auto per_secret = p.branches_per_secret();
  if (!per_secret || *per_secret > branch_cap || secret.branch_count() > branch_cap / *per_secret) {
    throw Error(ErrorKind::EnumerationTooLarge, "encoding needs " + std::to_string(secret.branch_count()) + " x " +
                                                    std::to_string(p.q()) + "^" +
                                                    std::to_string(p.randomness_length()) +
                                                    " branches, cap is " + std::to_string(branch_cap));
  }
  detail::check_packable(p.q(), p.register_count());

  const std::size_t total = secret.branch_count() * static_cast<std::size_t>(*per_secret);
  std::vector<SparseState::Digit> digits;
  std::vector<Amplitude> amplitudes;
  digits.reserve(total * p.register_count());
  amplitudes.reserve(total);
  const double scale = 1.0 / std::sqrt(static_cast<double>(*per_secret));
  for (std::size_t b = 0; b < secret.branch_count(); ++b) {
    auto label = secret.label(b);
    FieldVector s(p.field(), std::vector<Residue>(label.begin(), label.end()));
    const Amplitude amp = secret.amplitude(b) * scale;
    const auto range = enumerate_codewords(s, p, branch_cap);
    for (auto it = range.begin(); it != range.end(); ++it) {
      for (Residue c : it.symbols()) digits.push_back(static_cast<SparseState::Digit>(c));
      amplitudes.push_back(amp);
    }
  }
  std::vector<unsigned> all(p.n());
  for (unsigned i = 0; i < p.n(); ++i) all[i] = i + 1;
  return {p, SparseState::from_unique(p.q(), p.register_count(), std::move(digits), std::move(amplitudes)),
          ShareLayout(p), std::move(all)};
}

struct TranscriptOp {
  enum class Kind { Affine, ControlledAdd };
  Kind kind;
  std::string description;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> sources;
  FieldMatrix coefficients;
  /// Constant added after an affine map; empty means zero.
  std::vector<Residue> offset = {};
};

struct RecoveryTranscript {
  std::vector<unsigned> participants;
  /// Registers received from each participant, parallel to `participants`.
  std::vector<std::vector<std::size_t>> accessed_registers;
  std::vector<TranscriptOp> operations;
  std::size_t qudit_cost = 0;
  /// q^{qudit_cost}; nullopt past 2^64.
  std::optional<std::uint64_t> channel_dim;
  std::vector<std::size_t> output_registers;

  std::vector<std::size_t> all_accessed() const {
    std::vector<std::size_t> out;
    for (const auto& regs : accessed_registers) out.insert(out.end(), regs.begin(), regs.end());
    return out;
  }

  /// Structural locality: every register an operation reads or writes was received.
  bool local() const {
    const auto acc = all_accessed();
    const std::set<std::size_t> allowed(acc.begin(), acc.end());
    for (const auto& op : operations) {
      for (std::size_t r : op.targets) {
        if (!allowed.count(r)) return false;
      }
      for (std::size_t r : op.sources) {
        if (!allowed.count(r)) return false;
      }
    }
    for (std::size_t r : output_registers) {
      if (!allowed.count(r)) return false;
    }
    return true;
  }
};

/// A recovery session restricted to the registers it was handed.
class Combiner {
 public:
  Combiner(SparseState state, unsigned q) : state_(std::move(state)), q_(q) {}

  void receive(unsigned participant, std::vector<std::size_t> registers) {
    for (std::size_t r : registers) {
      if (r >= state_.register_count()) throw Error(ErrorKind::IndexOutOfRange, "received register out of range");
      allowed_.insert(r);
    }
    transcript_.participants.push_back(participant);
    transcript_.qudit_cost += registers.size();
    transcript_.accessed_registers.push_back(std::move(registers));
    transcript_.channel_dim = checked_pow(q_, transcript_.qudit_cost);
  }

  void apply(const RegisterMap& map, std::string description) {
    require_local(map.targets());
    state_ = apply_affine(std::move(state_), map);
    transcript_.operations.push_back(
        {TranscriptOp::Kind::Affine, std::move(description), map.targets(), {}, map.linear_part(),
         std::vector<Residue>(map.offset().entries().begin(), map.offset().entries().end())});
  }

  void controlled_add(const std::vector<std::size_t>& sources, const std::vector<std::size_t>& targets,
                      const FieldMatrix& coeff, std::string description) {
    require_local(sources);
    require_local(targets);
    state_ = apply_controlled_add(std::move(state_), sources, targets, coeff);
    transcript_.operations.push_back(
        {TranscriptOp::Kind::ControlledAdd, std::move(description), targets, sources, coeff});
  }

  void set_output(std::vector<std::size_t> registers) {
    require_local(registers);
    transcript_.output_registers = std::move(registers);
  }

  const SparseState& state() const noexcept { return state_; }
  const RecoveryTranscript& transcript() const noexcept { return transcript_; }
  std::pair<SparseState, RecoveryTranscript> finish() && { return {std::move(state_), std::move(transcript_)}; }

 private:
  void require_local(const std::vector<std::size_t>& regs) const {
    for (std::size_t r : regs) {
      if (!allowed_.count(r)) {
        throw Error(ErrorKind::CombinerLocalityViolation,
                    "register " + std::to_string(r) + " was not sent to the combiner");
      }
    }
  }

  SparseState state_;
  unsigned q_;
  std::set<std::size_t> allowed_;
  RecoveryTranscript transcript_;
};

struct RecoveryResult {
  SparseState state;
  RecoveryTranscript transcript;
};

namespace detail {

inline std::vector<unsigned> checked_subset(const DealtState& dealt, std::vector<unsigned> subset,
                                            std::size_t expected) {
  if (subset.size() != expected) {
    throw Error(ErrorKind::WrongSetSize, "expected " + std::to_string(expected) + " participants, got " +
                                             std::to_string(subset.size()));
  }
  std::sort(subset.begin(), subset.end());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 1 || subset[i] > dealt.params.n()) {
      throw Error(ErrorKind::WrongSetSize, "participant " + std::to_string(subset[i]) + " does not exist");
    }
    if (i > 0 && subset[i] == subset[i - 1]) throw Error(ErrorKind::WrongSetSize, "participant listed twice");
    if (!dealt.is_retained(subset[i])) {
      throw Error(ErrorKind::WrongSetSize, "share " + std::to_string(subset[i]) + " was discarded");
    }
  }
  return subset;
}

/// 0-based generator rows for a sorted participant list.
inline std::vector<std::size_t> rows_of(const std::vector<unsigned>& participants) {
  std::vector<std::size_t> rows;
  for (unsigned i : participants) rows.push_back(i - 1);
  return rows;
}

inline std::vector<unsigned> others(const std::vector<unsigned>& subset, unsigned n) {
  std::vector<unsigned> out;
  for (unsigned i = 1; i <= n; ++i) {
    if (!std::binary_search(subset.begin(), subset.end(), i)) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Recovers the secret from the first register of each of d shares.
inline RecoveryResult recover_from_d(const DealtState& dealt, std::vector<unsigned> subset) {
  const SchemeParams& p = dealt.params;
  const auto D = detail::checked_subset(dealt, std::move(subset), p.d());
  const auto E = detail::others(D, p.n());
  const std::size_t m = p.m();
  const std::size_t u_len = p.u_length();
  const auto all_cols = index_range(0, p.d());

  Combiner combiner(dealt.state, p.q());
  std::vector<std::size_t> held;
  for (unsigned i : D) {
    const std::size_t reg = dealt.layout.register_of(i, 1);
    combiner.receive(i, {reg});
    held.push_back(reg);
  }

  const auto v_d = submatrix(p.generator(), detail::rows_of(D), all_cols);
  combiner.apply(RegisterMap::linear(held, mat_inv(v_d)), "invert V_D on the received registers -> (s, u, v)");

  const std::vector<std::size_t> s_regs(held.begin(), held.begin() + m);
  const std::vector<std::size_t> u_regs(held.begin() + m, held.begin() + m + u_len);
  const std::vector<std::size_t> v_regs(held.begin() + m + u_len, held.end());
  if (u_len > 0) {
    const auto v_e = submatrix(p.generator(), detail::rows_of(E), all_cols);
    const auto on_u = column_block(v_e, m, u_len);
    combiner.apply(RegisterMap::linear(u_regs, on_u), "u <- V_E[u-columns] u");
    std::vector<std::size_t> controls = s_regs;
    controls.insert(controls.end(), v_regs.begin(), v_regs.end());
    const auto on_sv = hconcat(column_block(v_e, 0, m), column_block(v_e, m + u_len, p.v_length()));
    combiner.controlled_add(controls, u_regs, on_sv, "u <- u + V_E[s-columns] s + V_E[v-columns] v");
  }
  combiner.set_output(s_regs);
  auto [state, transcript] = std::move(combiner).finish();
  return {std::move(state), std::move(transcript)};
}

/// Recovers the secret from all m registers of each of k shares.
inline RecoveryResult recover_from_k(const DealtState& dealt, std::vector<unsigned> subset) {
  const SchemeParams& p = dealt.params;
  const auto K = detail::checked_subset(dealt, std::move(subset), p.k());
  const auto L = detail::others(K, p.n());
  const std::size_t m = p.m();
  const std::size_t k = p.k();
  const std::size_t u_len = p.u_length();
  const auto all_cols = index_range(0, p.d());
  const auto v_k = submatrix(p.generator(), detail::rows_of(K), all_cols);
  const auto v_l = submatrix(p.generator(), detail::rows_of(L), all_cols);

  Combiner combiner(dealt.state, p.q());
  for (unsigned i : K) combiner.receive(i, dealt.layout.share_registers(i));

  // column[j] lists the j-th register of every share in K.
  std::vector<std::vector<std::size_t>> column(m);
  for (unsigned j = 0; j < m; ++j) {
    for (unsigned i : K) column[j].push_back(dealt.layout.register_of(i, j + 1));
  }

  const auto last_k = column_block(v_k, m - 1, k);
  const auto last_k_inv = mat_inv(last_k);
  for (std::size_t j = 1; j < m; ++j) {
    combiner.apply(RegisterMap::linear(column[j], last_k_inv),
                   "invert V_K[last k columns] on column " + std::to_string(j + 1) + " -> (v, r)");
  }

  std::vector<std::size_t> v_regs;
  for (std::size_t j = 1; j < m; ++j) v_regs.push_back(column[j][0]);
  if (m > 1) {
    combiner.controlled_add(v_regs, column[0], column_block(v_k, k, m - 1).negated(),
                            "column 1 <- column 1 - V_K[v-columns] v");
  }
  combiner.apply(RegisterMap::linear(column[0], mat_inv(column_block(v_k, 0, k))),
                 "invert V_K[first k columns] on column 1 -> (s, u)");

  const std::vector<std::size_t> s_regs(column[0].begin(), column[0].begin() + m);
  if (k > 1) {
    const auto on_tail = column_block(v_l, m, k - 1);
    for (std::size_t j = 1; j < m; ++j) {
      const std::vector<std::size_t> r_regs(column[j].begin() + 1, column[j].end());
      combiner.apply(RegisterMap::linear(r_regs, on_tail),
                     "r_" + std::to_string(j + 1) + " <- V_L[tail columns] r_" + std::to_string(j + 1));
      combiner.controlled_add({column[j][0]}, r_regs, column_block(v_l, m - 1, 1),
                              "r_" + std::to_string(j + 1) + " <- r_" + std::to_string(j + 1) + " + V_L[v column] v");
    }
    std::vector<std::size_t> r1_regs(column[0].begin() + m, column[0].begin() + m + u_len);
    r1_regs.insert(r1_regs.end(), v_regs.begin(), v_regs.end());
    combiner.apply(RegisterMap::linear(r1_regs, on_tail), "r_1 <- V_L[tail columns] r_1");
    combiner.controlled_add(s_regs, r1_regs, column_block(v_l, 0, m), "r_1 <- r_1 + V_L[s-columns] s");
  }
  combiner.set_output(s_regs);
  auto [state, transcript] = std::move(combiner).finish();
  return {std::move(state), std::move(transcript)};
}

/// Reduced state of the shares in `subset` (empty subset gives the 1x1 identity).
inline DensityMatrix reduced_share_state(const DealtState& dealt, std::vector<unsigned> subset,
                                         std::uint64_t dim_cap = kDefaultDimCap) {
  std::sort(subset.begin(), subset.end());
  for (unsigned i : subset) {
    if (i < 1 || i > dealt.params.n() || !dealt.is_retained(i)) {
      throw Error(ErrorKind::WrongSetSize, "participant " + std::to_string(i) + " holds no share");
    }
  }
  const auto regs = dealt.layout.registers_of(subset);
  return partial_trace(dealt.state, regs, dim_cap);
}

struct SecrecyReport {
  std::vector<unsigned> subset;
  double max_trace_distance = 0.0;
  std::size_t secrets_tested = 0;

  bool passed() const noexcept { return max_trace_distance <= tolerance::kEquality; }
};

/// Compares the reduced states of `subset` under each pair of secrets.
inline SecrecyReport secrecy_check(const SchemeParams& p, std::vector<unsigned> subset,
                                   const std::vector<std::pair<SparseState, SparseState>>& secret_pairs,
                                   std::uint64_t dim_cap = kDefaultDimCap,
                                   std::uint64_t branch_cap = kDefaultBranchCap) {
  if (subset.size() + 1 > p.k()) {
    throw Error(ErrorKind::WrongSetSize, "secrecy applies to at most k-1 shares");
  }
  std::sort(subset.begin(), subset.end());
  const auto dim = checked_pow(p.q(), std::size_t{p.m()} * subset.size());
  if (!dim || *dim > dim_cap) {
    throw Error(ErrorKind::DimensionCapExceeded, "reduced state of " + std::to_string(subset.size()) +
                                                     " shares exceeds dimension cap " + std::to_string(dim_cap));
  }
  SecrecyReport report{subset, 0.0, 0};
  for (const auto& [a, b] : secret_pairs) {
    const auto rho = reduced_share_state(deal(a, p, branch_cap), subset, dim_cap);
    const auto sigma = reduced_share_state(deal(b, p, branch_cap), subset, dim_cap);
    report.max_trace_distance = std::max(report.max_trace_distance, trace_distance(rho, sigma));
    report.secrets_tested += 2;
  }
  return report;
}

/// The complement of an authorized set must reveal nothing.
inline bool verify_complement_rule(const SchemeParams& p, std::vector<unsigned> authorized,
                                   const std::vector<std::pair<SparseState, SparseState>>& secret_pairs,
                                   std::uint64_t dim_cap = kDefaultDimCap,
                                   std::uint64_t branch_cap = kDefaultBranchCap) {
  std::sort(authorized.begin(), authorized.end());
  if (authorized.size() < p.k()) throw Error(ErrorKind::WrongSetSize, "authorized sets have at least k shares");
  const auto rest = detail::others(authorized, p.n());
  if (rest.size() + 1 > p.k()) return false;
  return secrecy_check(p, rest, secret_pairs, dim_cap, branch_cap).passed();
}

/// Drops shares n'+1..n; their registers stay in the pure state as environment.
inline DealtState convert_to_mixed(DealtState dealt, unsigned n_prime) {
  if (n_prime < dealt.params.k() || n_prime > dealt.params.n()) {
    throw Error(ErrorKind::InvalidShareCount, "need k <= n' <= 2k-1, got n'=" + std::to_string(n_prime));
  }
  std::vector<unsigned> kept;
  for (unsigned i : dealt.retained) {
    if (i <= n_prime) kept.push_back(i);
  }
  dealt.retained = std::move(kept);
  return dealt;
}

/// M^{d/(d-k+1)}, exact when M is a perfect (d-k+1)-th power.
struct ChannelBound {
  bool exact = false;
  std::uint64_t dim = 0;
  double value = 0.0;
  /// Root M^{1/(d-k+1)} when exact.
  std::uint64_t root = 0;
};

inline ChannelBound lower_bound(std::uint64_t secret_dim, unsigned k, unsigned d) {
  if (secret_dim < 2 || k < 1 || d < k) throw Error(ErrorKind::InvalidParams, "need M >= 2 and 1 <= k <= d");
  const unsigned width = d - k + 1;
  ChannelBound out;
  out.value = std::pow(static_cast<double>(secret_dim), static_cast<double>(d) / width);
  auto r = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(secret_dim), 1.0 / width)));
  for (std::uint64_t cand : {r > 0 ? r - 1 : 0, r, r + 1}) {
    if (cand < 2) continue;
    if (checked_pow(cand, width) == std::optional<std::uint64_t>(secret_dim)) {
      if (auto dim = checked_pow(cand, d)) {
        out.exact = true;
        out.dim = *dim;
        out.root = cand;
      }
      break;
    }
  }
  return out;
}

struct CostRow {
  std::string mode;
  unsigned participants;
  std::size_t qudits;
  double ratio;
  ChannelBound bound;
  bool optimal;
};

/// One row per recovery mode: k shares in full, or the first register of d shares.
inline std::vector<CostRow> cost_table(const SchemeParams& p) {
  const std::uint64_t secret_dim = *checked_pow(p.q(), p.m());
  auto row = [&](std::string mode, unsigned contacted, std::size_t qudits) {
    const auto bound = lower_bound(secret_dim, p.k(), contacted);
    const auto achieved = checked_pow(p.q(), qudits);
    const bool optimal = bound.exact && achieved && *achieved == bound.dim;
    return CostRow{std::move(mode), contacted, qudits, static_cast<double>(qudits) / p.m(), bound, optimal};
  };
  std::vector<CostRow> rows;
  rows.push_back(row("k-mode", p.k(), std::size_t{p.m()} * p.k()));
  if (p.d() > p.k()) rows.push_back(row("d-mode", p.d(), p.d()));
  return rows;
}

/// The ((2,3)) scheme on qutrits: |s> -> sum_r |r, s+r, 2s+r> / sqrt(3).
inline SparseState encode_reference_cleve23(const SparseState& secret) {
  if (secret.q() != 3) throw Error(ErrorKind::WrongModulus, "the reference scheme works over F_3");
  if (secret.register_count() != 1) throw Error(ErrorKind::LengthMismatch, "the reference secret is one qutrit");
  std::vector<std::pair<BasisLabel, Amplitude>> branches;
  for (std::size_t b = 0; b < secret.branch_count(); ++b) {
    const Residue s = secret.label(b)[0];
    for (Residue r = 0; r < 3; ++r) {
      branches.push_back({{r, (s + r) % 3, (2 * s + r) % 3}, secret.amplitude(b) / std::sqrt(3.0)});
    }
  }
  return SparseState::from_branches(3, branches);
}

}  // namespace qtss
