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

// Random generators and the simulator properties shared by the unit tests
// and the acceptance run. Each property returns an empty string on success,
// or a description of the first violation.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qtss/qsim.hpp"

namespace props {

/// Random state on `registers` qudits with a random support of up to `max_branches` labels.
inline qtss::SparseState random_state(std::mt19937_64& rng, unsigned q, std::size_t registers,
                                      std::size_t max_branches) {
  std::normal_distribution<double> gauss;
  std::vector<std::pair<qtss::BasisLabel, qtss::Amplitude>> branches;
  const std::size_t count = 1 + rng() % max_branches;
  for (std::size_t b = 0; b < count; ++b) {
    qtss::BasisLabel label(registers);
    for (auto& d : label) d = static_cast<qtss::Residue>(rng() % q);
    branches.push_back({label, {gauss(rng), gauss(rng)}});
  }
  return qtss::SparseState::from_branches(q, branches);
}

inline std::vector<std::size_t> random_subset(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng() % 2) out.push_back(i);
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline qtss::FieldMatrix random_invertible(std::mt19937_64& rng, qtss::PrimeField f, std::size_t n) {
  while (true) {
    std::vector<qtss::Residue> e(n * n);
    for (auto& x : e) x = static_cast<qtss::Residue>(rng() % f.modulus());
    qtss::FieldMatrix m(f, n, n, e);
    if (qtss::is_invertible(m)) return m;
  }
}

/// Nonzero eigenvalues, ascending.
inline std::vector<double> support_spectrum(const qtss::DensityMatrix& rho) {
  std::vector<double> out;
  for (double ev : rho.eigenvalues()) {
    if (std::abs(ev) > 1e-12) out.push_back(ev);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Random affine maps and controlled adds relabel branches without touching
/// amplitudes, so norm and support size are exact and the inverse restores the state.
inline std::string maps_preserve_norm_and_invert(std::mt19937_64& rng) {
  const unsigned q = std::vector<unsigned>{2, 3, 5, 7, 11}[rng() % 5];
  const std::size_t regs = 1 + rng() % 6;
  const auto psi = random_state(rng, q, regs, 30);
  qtss::PrimeField f(q);
  auto targets = random_subset(rng, regs);
  if (targets.empty()) targets.push_back(rng() % regs);
  std::vector<qtss::Residue> off(targets.size());
  for (auto& x : off) x = static_cast<qtss::Residue>(rng() % q);
  const auto map =
      qtss::RegisterMap::affine(targets, random_invertible(rng, f, targets.size()), qtss::FieldVector(f, off));
  auto unchanged = [&](const qtss::SparseState& out) {
    return out.branch_count() == psi.branch_count() && out.norm_squared() == psi.norm_squared();
  };
  const auto out = map.apply(psi);
  if (!unchanged(out)) return "affine map changed the norm or support size";
  if (!qtss::approx_equal(map.inverse().apply(out), psi, 0.0)) return "affine map did not invert exactly";

  const auto rest = qtss::detail::complement(targets, regs);
  if (!rest.empty()) {
    std::vector<qtss::Residue> c(targets.size() * rest.size());
    for (auto& x : c) x = static_cast<qtss::Residue>(rng() % q);
    const qtss::FieldMatrix coeff(f, targets.size(), rest.size(), c);
    const auto added = qtss::apply_controlled_add(psi, rest, targets, coeff);
    if (!unchanged(added)) return "controlled add changed the norm or support size";
    if (!qtss::approx_equal(qtss::apply_controlled_add(added, rest, targets, coeff.negated()), psi, 0.0)) {
      return "controlled add did not invert exactly";
    }
  }
  return {};
}

/// A pure state's reduced states on complementary blocks share their nonzero spectrum.
inline std::string schmidt_spectra_agree(std::mt19937_64& rng) {
  const unsigned q = std::vector<unsigned>{2, 3, 5}[rng() % 3];
  const std::size_t regs = 2 + rng() % 4;
  const auto psi = random_state(rng, q, regs, 40);
  const auto keep = random_subset(rng, regs);
  const auto rest = qtss::detail::complement(keep, regs);
  const auto a = support_spectrum(qtss::partial_trace(psi, keep));
  const auto b = support_spectrum(qtss::partial_trace(psi, rest));
  if (a.size() != b.size()) return "Schmidt ranks differ";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-10) return "Schmidt coefficients differ beyond 1e-10";
  }
  return {};
}

/// Tracing to a block and then to a sub-block equals tracing to the sub-block directly.
inline std::string partial_trace_composes(std::mt19937_64& rng) {
  const unsigned q = std::vector<unsigned>{2, 3, 5}[rng() % 3];
  const std::size_t regs = 2 + rng() % 4;
  const auto psi = random_state(rng, q, regs, 40);
  const auto outer = random_subset(rng, regs);
  std::vector<std::size_t> inner_pos;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    if (rng() % 2) inner_pos.push_back(i);
  }
  std::vector<std::size_t> inner;
  for (std::size_t i : inner_pos) inner.push_back(outer[i]);
  const auto two_step = qtss::partial_trace(psi, outer).partial_trace(inner_pos);
  const auto direct = qtss::partial_trace(psi, inner);
  if (qtss::trace_distance(two_step, direct) > 1e-10) return "two-step partial trace differs beyond 1e-10";
  return {};
}

}  // namespace props
