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
 * @file scenario.hpp
 * @brief Batch sweeps over parameter grids and their JSON/CSV reports.
 *
 * A scenario file is flat `key = value` text:
 *
 *     params  = 2,3,5; 3,4,7      # (k, d, q) triples
 *     modes   = all               # or a list from encode, recover-d, recover-k, secrecy, costs, mixed
 *     secrets = basis-exhaustive+random:20
 *     seed    = 7
 *
 * Each (params, mode) pair becomes one record. Recovery and secrecy sweeps
 * pick a verification method per record:
 *
 *  - `direct`: random secrets have support on all q^m basis states and are
 *    simulated as they are. Needs q^{mk} branches under the branch cap.
 *  - `linearity`: only the basis secrets 0, e_1, ..., e_m are simulated.
 *    Every combiner map is affine, so recovery of these determines recovery
 *    of every basis secret, and superpositions over them are checked from the
 *    leftover (junk) states. Needs (m+1) q^{m(k-1)} branches under the cap.
 *  - `affine`: nothing is simulated branch by branch. The register labels are
 *    tracked as an affine function of (s, r) through the recorded transcript
 *    (see affine.hpp) and recovery and secrecy are decided by rank conditions.
 *
 * Secrecy sweeps also fall back to `affine` when a reduced state would exceed
 * the dimension cap.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtss/affine.hpp"
#include "qtss/error.hpp"
#include "qtss/protocol.hpp"
#include "qtss/qsim.hpp"
#include "qtss/staircase.hpp"

namespace qtss::scenario {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string>& all_modes() {
  static const std::vector<std::string> modes{"encode", "recover-d", "recover-k", "secrecy", "costs", "mixed"};
  return modes;
}

struct GridEntry {
  unsigned k;
  unsigned d;
  unsigned q;

  friend bool operator==(const GridEntry&, const GridEntry&) = default;
};

struct ScenarioConfig {
  std::vector<GridEntry> params;
  std::vector<std::string> modes = all_modes();
  bool basis_exhaustive = true;
  std::size_t random_secrets = 20;
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "json";
  std::uint64_t cap_branches = kDefaultBranchCap;
  std::uint64_t cap_dim = kDefaultDimCap;
  /// Shares kept by the mixed-scheme sweep; defaults to n - 1 (or n when n - 1 < k).
  std::optional<unsigned> mixed_n;
  std::size_t secrecy_pairs = 10;
  /// Secret pairs for secrecy records verified by linearity.
  std::size_t secrecy_pairs_large = 2;
  bool timing = false;

  bool has_mode(std::string_view mode) const {
    return std::find(modes.begin(), modes.end(), mode) != modes.end();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorKind::ConfigInvalid, key + ": expected a non-negative integer, got '" + value + "'");
  }
  try {
    return std::stoull(value);
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::ConfigInvalid, key + ": value out of range");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorKind::ConfigInvalid, key + ": expected true or false, got '" + value + "'");
}

}  // namespace detail

inline void parse_secrets(ScenarioConfig& cfg, const std::string& value) {
  cfg.basis_exhaustive = false;
  cfg.random_secrets = 0;
  for (const auto& part : detail::split(value, '+')) {
    if (part == "basis-exhaustive") {
      cfg.basis_exhaustive = true;
    } else if (part.rfind("random:", 0) == 0) {
      cfg.random_secrets = detail::parse_uint("secrets", part.substr(7));
    } else {
      throw Error(ErrorKind::ConfigInvalid, "secrets: unknown policy '" + part + "'");
    }
  }
}

inline void parse_params(ScenarioConfig& cfg, const std::string& value) {
  cfg.params.clear();
  for (const auto& triple : detail::split(value, ';')) {
    if (triple.empty()) continue;
    const auto parts = detail::split(triple, ',');
    if (parts.size() != 3) throw Error(ErrorKind::ConfigInvalid, "params: expected k,d,q but got '" + triple + "'");
    cfg.params.push_back({static_cast<unsigned>(detail::parse_uint("params", parts[0])),
                          static_cast<unsigned>(detail::parse_uint("params", parts[1])),
                          static_cast<unsigned>(detail::parse_uint("params", parts[2]))});
  }
}

inline void parse_modes(ScenarioConfig& cfg, const std::string& value) {
  if (value == "all") {
    cfg.modes = all_modes();
    return;
  }
  cfg.modes.clear();
  for (const auto& mode : detail::split(value, ',')) {
    if (std::find(all_modes().begin(), all_modes().end(), mode) == all_modes().end()) {
      throw Error(ErrorKind::ConfigInvalid, "modes: unknown mode '" + mode + "'");
    }
    if (!cfg.has_mode(mode)) cfg.modes.push_back(mode);
  }
  // Records follow the canonical order regardless of how the list was written.
  std::vector<std::string> ordered;
  for (const auto& mode : all_modes()) {
    if (cfg.has_mode(mode)) ordered.push_back(mode);
  }
  cfg.modes = std::move(ordered);
}

/// Checks every grid entry and the settings that depend on it.
inline void validate(const ScenarioConfig& cfg) {
  if (cfg.params.empty()) throw Error(ErrorKind::ConfigInvalid, "params: at least one (k,d,q) triple is required");
  if (cfg.format != "json" && cfg.format != "csv") {
    throw Error(ErrorKind::ConfigInvalid, "format: expected json or csv, got '" + cfg.format + "'");
  }
  if (cfg.modes.empty()) throw Error(ErrorKind::ConfigInvalid, "modes: nothing to run");
  for (const auto& g : cfg.params) {
    try {
      const auto p = make_params(g.k, g.d, g.q);
      if (cfg.has_mode("mixed") && cfg.mixed_n && (*cfg.mixed_n < p.k() || *cfg.mixed_n > p.n())) {
        throw Error(ErrorKind::InvalidShareCount, "mixed_n=" + std::to_string(*cfg.mixed_n) + " outside [k, 2k-1]");
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigInvalid, "params (" + std::to_string(g.k) + "," + std::to_string(g.d) + "," +
                                                std::to_string(g.q) + "): " + e.what());
    }
  }
}

inline ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigInvalid, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = detail::trim(std::string_view(body).substr(0, eq));
    const auto value = detail::trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) throw Error(ErrorKind::ConfigInvalid, "key '" + key + "' given twice");
    if (key == "params") {
      parse_params(cfg, value);
    } else if (key == "modes") {
      parse_modes(cfg, value);
    } else if (key == "secrets") {
      parse_secrets(cfg, value);
    } else if (key == "seed") {
      cfg.seed = detail::parse_uint(key, value);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "format") {
      cfg.format = value;
    } else if (key == "cap_branches") {
      cfg.cap_branches = detail::parse_uint(key, value);
    } else if (key == "cap_dim") {
      cfg.cap_dim = detail::parse_uint(key, value);
    } else if (key == "mixed_n") {
      cfg.mixed_n = static_cast<unsigned>(detail::parse_uint(key, value));
    } else if (key == "secrecy_pairs") {
      cfg.secrecy_pairs = detail::parse_uint(key, value);
    } else if (key == "secrecy_pairs_large") {
      cfg.secrecy_pairs_large = detail::parse_uint(key, value);
    } else if (key == "timing") {
      cfg.timing = detail::parse_bool(key, value);
    } else {
      throw Error(ErrorKind::ConfigInvalid, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Counter-based generator: output i of stream s is a fixed function of (seed, s, i).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on (0, 1].
  double uniform() noexcept { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

  /// Box-Muller; one draw per call keeps the stream position easy to reason about.
  double normal() noexcept {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Digits of `index` in base q, most significant first.
inline BasisLabel basis_label(std::uint64_t index, unsigned q, std::size_t width) {
  BasisLabel out(width);
  for (std::size_t r = width; r-- > 0;) {
    out[r] = static_cast<Residue>(index % q);
    index /= q;
  }
  return out;
}

/// Haar-uniform on the unit sphere of C^{q^m}: complex Gaussians, normalized.
inline SparseState random_secret(CounterRng& rng, const SchemeParams& p) {
  const auto count = *checked_pow(p.q(), p.m());
  std::vector<std::pair<BasisLabel, Amplitude>> branches;
  branches.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) branches.push_back({basis_label(i, p.q(), p.m()), {rng.normal(), rng.normal()}});
  return SparseState::from_branches(p.q(), branches);
}

/// The basis secrets 0, e_1, ..., e_m.
inline std::vector<SparseState> generating_secrets(const SchemeParams& p) {
  std::vector<SparseState> out;
  std::vector<Residue> digits(p.m(), 0);
  out.push_back(SparseState::basis(p.q(), digits));
  for (std::size_t i = 0; i < p.m(); ++i) {
    digits.assign(p.m(), 0);
    digits[i] = 1;
    out.push_back(SparseState::basis(p.q(), digits));
  }
  return out;
}

/// Gaussian coefficients over the generating secrets, normalized.
inline std::vector<Amplitude> random_coefficients(CounterRng& rng, std::size_t count) {
  std::vector<Amplitude> out(count);
  double norm = 0.0;
  for (auto& a : out) {
    a = {rng.normal(), rng.normal()};
    norm += std::norm(a);
  }
  for (auto& a : out) a /= std::sqrt(norm);
  return out;
}

inline SparseState combine(const std::vector<SparseState>& basis, const std::vector<Amplitude>& coeffs) {
  std::vector<std::pair<SparseState, Amplitude>> terms;
  for (std::size_t i = 0; i < basis.size(); ++i) terms.push_back({basis[i], coeffs[i]});
  return superpose(terms);
}

/// All size-`size` subsets of `pool`, in lexicographic order.
inline std::vector<std::vector<unsigned>> subsets_of(const std::vector<unsigned>& pool, std::size_t size) {
  std::vector<std::vector<unsigned>> out;
  if (size > pool.size()) return out;
  std::vector<std::size_t> pick(size);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    std::vector<unsigned> s;
    for (std::size_t i : pick) s.push_back(pool[i]);
    out.push_back(std::move(s));
    std::size_t i = size;
    while (i > 0 && pick[i - 1] == pool.size() - size + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

enum class Method { Direct, Linearity, Affine };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Direct: return "direct";
    case Method::Linearity: return "linearity";
    case Method::Affine: return "affine";
  }
  return "affine";
}

/// Chooses how a recovery or secrecy sweep is verified under the branch cap.
inline Method choose_method(const SchemeParams& p, std::uint64_t cap_branches) {
  const auto all = checked_pow(p.q(), std::uint64_t{p.m()} * p.k());
  if (all && *all <= cap_branches) return Method::Direct;
  const auto per = p.branches_per_secret();
  if (per && *per <= cap_branches / (p.m() + 1)) return Method::Linearity;
  return Method::Affine;
}

struct Record {
  GridEntry grid;
  unsigned n = 0;
  unsigned m = 0;
  std::string mode;
  std::optional<unsigned> n_prime;
  std::string status = "pass";
  std::string method = "direct";
  std::size_t subsets_tested = 0;
  std::size_t secrets_tested = 0;
  std::size_t basis_secrets_tested = 0;
  std::optional<double> min_fidelity;
  std::optional<double> max_trace_distance;
  std::optional<std::size_t> qudit_cost;
  std::optional<std::uint64_t> channel_dim;
  std::optional<std::uint64_t> bound_dim;
  std::optional<std::size_t> complement_sets_checked;
  std::vector<CostRow> cost_rows;
  std::vector<std::string> violations;
  std::size_t violation_count = 0;
  std::optional<double> wall_ms;

  static constexpr std::size_t kMaxListedViolations = 20;

  bool passed() const noexcept { return status == "pass"; }

  void violate(std::string what) {
    status = "fail";
    ++violation_count;
    if (violations.size() < kMaxListedViolations) violations.push_back(std::move(what));
  }

  void cap_exceeded(std::string what) {
    status = "cap_exceeded";
    ++violation_count;
    violations.push_back("CapExceeded: " + std::move(what));
  }
};

struct RunReport {
  ScenarioConfig config;
  std::vector<Record> records;

  bool passed() const {
    return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.passed(); });
  }
};

namespace detail {

inline std::string set_string(const std::vector<unsigned>& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "}";
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline std::uint64_t stream_id(std::size_t grid_index, std::string_view mode, std::uint64_t purpose) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : mode) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return CounterRng::mix(h ^ (std::uint64_t{grid_index} << 40) ^ purpose);
}

inline std::vector<unsigned> retained_participants(unsigned count) {
  std::vector<unsigned> out(count);
  std::iota(out.begin(), out.end(), 1u);
  return out;
}

using RecoverFn = RecoveryResult (*)(const DealtState&, std::vector<unsigned>);

struct RecoveryMode {
  RecoverFn fn;
  std::size_t set_size;
  std::size_t cost;
  std::string name;
};

inline DealtState prepare(const SparseState& secret, const SchemeParams& p, unsigned retained,
                          std::uint64_t cap_branches) {
  auto dealt = deal(secret, p, cap_branches);
  return retained < p.n() ? convert_to_mixed(std::move(dealt), retained) : dealt;
}

inline void check_transcript(Record& rec, const RecoveryTranscript& t, const RecoveryMode& mode,
                             const std::string& where) {
  if (!t.local()) rec.violate("combiner locality" + where);
  if (t.qudit_cost != mode.cost) {
    rec.violate("qudit_cost " + std::to_string(t.qudit_cost) + " != " + std::to_string(mode.cost) + where);
  }
}

/// Checks one simulated recovery against `secret`; returns the fidelity.
inline double check_recovery(Record& rec, const DealtState& dealt, const RecoveryResult& result,
                             const SparseState& secret, const RecoveryMode& mode, const std::vector<unsigned>& set,
                             std::uint64_t cap_dim) {
  const auto& t = result.transcript;
  const std::string where = " for " + mode.name + " set " + set_string(set);
  check_transcript(rec, t, mode, where);
  // Basis permutations move digits only; the amplitude array must be untouched.
  const auto before = dealt.state.amplitudes();
  const auto after = result.state.amplitudes();
  if (!std::equal(before.begin(), before.end(), after.begin(), after.end())) {
    rec.violate("norm preservation (amplitudes changed)" + where);
  }
  // The factor_check test, sharing one reduced state with the fidelity.
  const auto rho = partial_trace(result.state, t.output_registers, cap_dim);
  const double f = fidelity(rho, secret);
  if (f < 1.0 - tolerance::kEquality) rec.violate("fidelity " + fmt(1.0 - f) + " below 1 - 1e-10" + where);
  if (f < 1.0 - tolerance::kEquality || std::abs(rho.purity() - 1.0) > tolerance::kEquality) {
    rec.violate("factor_check (secret not disentangled, tol 1e-10)" + where);
  }
  return f;
}

}  // namespace detail

/// Encoding checks: branch count, uniform amplitudes, codeword membership and linearity.
inline Record run_encode(const SchemeParams& p, const ScenarioConfig& cfg, std::size_t grid_index) {
  Record rec;
  rec.mode = "encode";
  CounterRng rng(cfg.seed, detail::stream_id(grid_index, "encode", 0));
  const auto secret_space = checked_pow(p.q(), p.m());
  const auto per = p.branches_per_secret();
  constexpr std::size_t kSamples = 2048;
  auto random_vector = [&](std::size_t len) {
    std::vector<Residue> v(len);
    for (auto& x : v) x = static_cast<Residue>(rng.below(p.q()));
    return FieldVector(p.field(), std::move(v));
  };

  if (!per || !secret_space || *per > cfg.cap_branches / 2) {
    // Too many branches to build: check the label matrix against direct encodings instead.
    rec.method = "affine";
    const auto e = AffineEnsemble::from_encoding(p);
    if (!e.injective()) rec.violate("randomness map is not injective: fewer than q^{m(k-1)} distinct codewords");
    for (std::size_t i = 0; i < kSamples; ++i) {
      const auto s = random_vector(p.m());
      const auto r = random_vector(p.randomness_length());
      const auto c = encode_classical(s, split_randomness(r, p), p);
      if (!std::ranges::equal(c.entries(), e.label(s, r))) rec.violate("encoding is not affine in (s, r)");
    }
    rec.secrets_tested = kSamples;
    return rec;
  }

  std::vector<std::uint64_t> basis;
  const bool exhaustive = cfg.basis_exhaustive && choose_method(p, cfg.cap_branches) == Method::Direct;
  rec.method = exhaustive ? "exhaustive" : "sampled";
  if (exhaustive) {
    for (std::uint64_t i = 0; i < *secret_space; ++i) basis.push_back(i);
  } else {
    basis.push_back(0);
    for (std::size_t i = 0; i < p.m(); ++i) basis.push_back(*checked_pow(p.q(), p.m() - 1 - i));
  }
  // Every codeword is compared below this size, a sample above it.
  constexpr std::uint64_t kFullCompare = 20'000;
  const double amp = 1.0 / std::sqrt(static_cast<double>(*per));
  for (std::uint64_t index : basis) {
    const auto label = basis_label(index, p.q(), p.m());
    const auto dealt = deal(SparseState::basis(p.q(), label), p, cfg.cap_branches);
    const std::string where = " for basis secret #" + std::to_string(index);
    if (dealt.state.branch_count() != *per) rec.violate("branch count != q^{m(k-1)}" + where);
    for (const auto& a : dealt.state.amplitudes()) {
      if (std::abs(a - Amplitude{amp, 0.0}) > tolerance::kNormalization) {
        rec.violate("non-uniform amplitude (tol 1e-12)" + where);
        break;
      }
    }
    std::unordered_set<std::uint64_t> keys;
    keys.reserve(dealt.state.branch_count());
    for (std::size_t b = 0; b < dealt.state.branch_count(); ++b) keys.insert(dealt.state.key(b));
    if (keys.size() != dealt.state.branch_count()) rec.violate("repeated codeword" + where);
    const FieldVector s(p.field(), label);
    auto expect_member = [&](const FieldVector& r) {
      const auto c = encode_classical(s, split_randomness(r, p), p);
      std::uint64_t key = 0;
      for (Residue x : c.entries()) key = key * p.q() + x;
      if (!keys.count(key)) rec.violate("codeword V M(s, r) missing from the encoded state" + where);
    };
    if (*per <= kFullCompare) {
      for (std::uint64_t i = 0; i < *per; ++i) expect_member(FieldVector(p.field(), basis_label(i, p.q(), p.randomness_length())));
    } else {
      for (std::size_t i = 0; i < kSamples; ++i) expect_member(random_vector(p.randomness_length()));
    }
    ++rec.basis_secrets_tested;
  }
  // Linearity on two-term superpositions; a handful suffices once states are large.
  const std::size_t trials = *per <= kFullCompare ? cfg.random_secrets : std::min<std::size_t>(cfg.random_secrets, 3);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto a = rng.below(*secret_space);
    auto b = rng.below(*secret_space);
    if (b == a) b = (a + 1) % *secret_space;
    const auto coeffs = random_coefficients(rng, 2);
    const auto sa = SparseState::basis(p.q(), basis_label(a, p.q(), p.m()));
    const auto sb = SparseState::basis(p.q(), basis_label(b, p.q(), p.m()));
    const auto lhs = deal(superpose({{sa, coeffs[0]}, {sb, coeffs[1]}}), p, cfg.cap_branches).state;
    const auto rhs =
        superpose({{deal(sa, p, cfg.cap_branches).state, coeffs[0]}, {deal(sb, p, cfg.cap_branches).state, coeffs[1]}});
    if (!approx_equal(lhs, rhs, tolerance::kEquality)) rec.violate("deal is not linear (tol 1e-10)");
    ++rec.secrets_tested;
  }
  rec.secrets_tested += rec.basis_secrets_tested;
  return rec;
}

namespace detail {

/// Recovery verified on the label matrix: every basis secret exactly, plus seeded superpositions.
inline double affine_recovery(Record& rec, const SchemeParams& p, const ScenarioConfig& cfg, CounterRng& rng,
                              const RecoveryMode& mode, const std::vector<std::vector<unsigned>>& sets,
                              unsigned retained) {
  const auto skeleton = transcript_skeleton(p, retained);
  const auto secret_space = checked_pow(p.q(), p.m());
  const bool enumerable = secret_space && *secret_space <= cfg.cap_branches;
  std::vector<std::vector<Amplitude>> alphas;
  if (enumerable) {
    for (std::size_t t = 0; t < cfg.random_secrets; ++t) alphas.push_back(random_coefficients(rng, *secret_space));
  }
  double min_f = 1.0;
  for (const auto& set : sets) {
    const auto result = mode.fn(skeleton, set);
    const auto& t = result.transcript;
    const std::string where = " for " + mode.name + " set " + set_string(set);
    check_transcript(rec, t, mode, where);
    auto e = AffineEnsemble::from_encoding(p);
    e.replay(t);
    const auto algebra = recovery_algebra(e, t.output_registers);
    if (!algebra.output_is_secret) {
      rec.violate("output registers do not hold s on every branch" + where);
      if (enumerable) {
        for (std::uint64_t i = 0; i < *secret_space; ++i) {
          const FieldVector s(p.field(), basis_label(i, p.q(), p.m()));
          min_f = std::min(min_f, basis_fidelity(e, t.output_registers, s));
        }
      } else {
        min_f = 0.0;
      }
      continue;
    }
    if (!algebra.junk_independent) rec.violate("leftover registers depend on the secret (not disentangled)" + where);
    for (const auto& alpha : alphas) {
      const double f = superposition_fidelity(algebra, p.field(), p.m(), alpha);
      if (f < 1.0 - tolerance::kEquality) rec.violate("fidelity " + fmt(1.0 - f) + " below 1 - 1e-10" + where);
      min_f = std::min(min_f, f);
    }
  }
  rec.basis_secrets_tested = enumerable ? *secret_space : 0;
  rec.secrets_tested = rec.basis_secrets_tested + alphas.size();
  return min_f;
}

}  // namespace detail

/// Recovery through `mode_name` ("recover-d" or "recover-k") for every admissible set of retained shares.
inline Record run_recovery(const SchemeParams& p, const ScenarioConfig& cfg, std::size_t grid_index,
                           const std::string& mode_name, unsigned retained) {
  Record rec;
  rec.mode = mode_name;
  const bool d_mode = mode_name == "recover-d";
  const detail::RecoveryMode mode{d_mode ? detail::RecoverFn(&recover_from_d) : detail::RecoverFn(&recover_from_k),
                                  d_mode ? p.d() : p.k(), d_mode ? std::size_t{p.d()} : std::size_t{p.m()} * p.k(),
                                  d_mode ? "D" : "K"};
  rec.qudit_cost = mode.cost;
  rec.channel_dim = checked_pow(p.q(), mode.cost);
  if (d_mode) {
    const auto bound = lower_bound(*checked_pow(p.q(), p.m()), p.k(), p.d());
    if (bound.exact) rec.bound_dim = bound.dim;
    if (!bound.exact || rec.channel_dim != rec.bound_dim) rec.violate("d-mode channel dimension != lower bound");
  }
  const auto sets = subsets_of(detail::retained_participants(retained), mode.set_size);
  if (sets.empty()) {
    rec.violate("no " + std::to_string(mode.set_size) + "-subset among " + std::to_string(retained) + " shares");
    return rec;
  }
  rec.subsets_tested = sets.size();
  const Method method = choose_method(p, cfg.cap_branches);
  rec.method = to_string(method);
  CounterRng rng(cfg.seed, detail::stream_id(grid_index, mode_name, retained));

  if (method == Method::Affine) {
    rec.min_fidelity = detail::affine_recovery(rec, p, cfg, rng, mode, sets, retained);
    return rec;
  }

  double min_f = 1.0;
  if (method == Method::Direct) {
    std::vector<SparseState> secrets;
    if (cfg.basis_exhaustive) {
      const auto count = *checked_pow(p.q(), p.m());
      for (std::uint64_t i = 0; i < count; ++i) secrets.push_back(SparseState::basis(p.q(), basis_label(i, p.q(), p.m())));
      rec.basis_secrets_tested = secrets.size();
    }
    for (std::size_t t = 0; t < cfg.random_secrets; ++t) secrets.push_back(random_secret(rng, p));
    for (const auto& secret : secrets) {
      const auto dealt = detail::prepare(secret, p, retained, cfg.cap_branches);
      for (const auto& set : sets) {
        const auto result = mode.fn(dealt, set);
        min_f = std::min(min_f, detail::check_recovery(rec, dealt, result, secret, mode, set, cfg.cap_dim));
      }
    }
    rec.secrets_tested = secrets.size();
  } else {
    // Every map is affine over F_q, so the generators 0, e_1, ..., e_m fix the action on all
    // basis secrets; superpositions over them are checked through the leftover states.
    const auto gens = generating_secrets(p);
    std::vector<DealtState> dealt;
    for (const auto& g : gens) dealt.push_back(detail::prepare(g, p, retained, cfg.cap_branches));
    std::vector<std::vector<Amplitude>> coeffs;
    for (std::size_t t = 0; t < cfg.random_secrets; ++t) coeffs.push_back(random_coefficients(rng, gens.size()));
    for (const auto& set : sets) {
      std::vector<KeyedAmplitudes> junk;
      for (std::size_t g = 0; g < gens.size(); ++g) {
        const auto result = mode.fn(dealt[g], set);
        min_f = std::min(min_f, detail::check_recovery(rec, dealt[g], result, gens[g], mode, set, cfg.cap_dim));
        junk.push_back(keyed_amplitudes(
            conditional_state(result.state, result.transcript.output_registers, gens[g].label_vector(0))));
      }
      // Output sum_g alpha_g |g>|J_g> has fidelity sum_{a,b} |alpha_a|^2 |alpha_b|^2 <J_b|J_a> with the input.
      std::vector<std::vector<Amplitude>> gram(gens.size(), std::vector<Amplitude>(gens.size(), Amplitude{1.0, 0.0}));
      for (std::size_t a = 0; a < gens.size(); ++a) {
        for (std::size_t b = a + 1; b < gens.size(); ++b) {
          gram[a][b] = inner_product(junk[b], junk[a]);
          gram[b][a] = std::conj(gram[a][b]);
        }
      }
      for (const auto& alpha : coeffs) {
        qtss::detail::ComplexSum f;
        for (std::size_t a = 0; a < gens.size(); ++a) {
          for (std::size_t b = 0; b < gens.size(); ++b) f.add(std::norm(alpha[a]) * std::norm(alpha[b]) * gram[a][b]);
        }
        const double fid = std::clamp(f.value().real(), 0.0, 1.0);
        if (fid < 1.0 - tolerance::kEquality) {
          rec.violate("fidelity " + detail::fmt(1.0 - fid) + " below 1 - 1e-10 for a generator superposition, " +
                      mode.name + " set " + detail::set_string(set));
        }
        min_f = std::min(min_f, fid);
      }
    }
    rec.basis_secrets_tested = gens.size();
    rec.secrets_tested = gens.size() + coeffs.size();
  }
  rec.min_fidelity = min_f;
  return rec;
}

namespace detail {

/// Complement rule over the scheme's k-subsets, given the unauthorized sets found secret.
inline void check_complements(Record& rec, const SchemeParams& p, const std::vector<unsigned>& pool,
                              const std::function<bool(const std::vector<unsigned>&)>& is_secret) {
  std::size_t checked = 0;
  for (const auto& a : subsets_of(pool, p.k())) {
    std::vector<unsigned> rest;
    for (unsigned i : pool) {
      if (std::find(a.begin(), a.end(), i) == a.end()) rest.push_back(i);
    }
    if (!is_secret(rest)) rec.violate("complement of " + set_string(a) + " is not unauthorized");
    ++checked;
  }
  rec.complement_sets_checked = checked;
}

inline void affine_secrecy(Record& rec, const SchemeParams& p, const std::vector<unsigned>& pool, std::size_t top) {
  const auto e = AffineEnsemble::from_encoding(p);
  const ShareLayout layout(p);
  std::map<std::vector<unsigned>, bool> secret;
  for (std::size_t size = 0; size <= top; ++size) {
    for (const auto& set : subsets_of(pool, size)) {
      const auto a = secrecy_algebra(e, layout.registers_of(set));
      secret[set] = a.secret();
      if (!a.rest_determines_secret) rec.violate("secrets interfere on " + set_string(set) + " (cross terms nonzero)");
      if (!a.secret_hidden_on_block) rec.violate("reduced state of " + set_string(set) + " depends on the secret");
      if (size == p.k() - 1 && !a.maximally_mixed) {
        rec.violate("reduced state of " + set_string(set) + " is not maximally mixed");
      }
    }
  }
  rec.subsets_tested = secret.size();
  rec.secrets_tested = 0;
  if (const auto space = checked_pow(p.q(), p.m())) rec.basis_secrets_tested = *space;
  // Both conditions make every reduced state the same operator, so the distance is exactly zero.
  if (rec.violation_count == 0) rec.max_trace_distance = 0.0;
  if (pool.size() == p.n()) {
    check_complements(rec, p, pool, [&](const std::vector<unsigned>& s) {
      const auto it = secret.find(s);
      return it != secret.end() && it->second;
    });
  }
}

}  // namespace detail

/// Secrecy of every retained subset with at most k-1 shares, plus the complement rule.
inline Record run_secrecy(const SchemeParams& p, const ScenarioConfig& cfg, std::size_t grid_index,
                          unsigned retained) {
  Record rec;
  rec.mode = "secrecy";
  const auto pool = detail::retained_participants(retained);
  const std::size_t top = std::min<std::size_t>(p.k() - 1, retained);
  const auto dim = checked_pow(p.q(), std::uint64_t{p.m()} * top);
  Method method = choose_method(p, cfg.cap_branches);
  if (!dim || *dim > cfg.cap_dim) method = Method::Affine;
  rec.method = to_string(method);
  if (method == Method::Affine) {
    detail::affine_secrecy(rec, p, pool, top);
    return rec;
  }
  CounterRng rng(cfg.seed, detail::stream_id(grid_index, "secrecy", retained));

  std::vector<std::pair<SparseState, SparseState>> pairs;
  if (method == Method::Direct) {
    for (std::size_t i = 0; i < cfg.secrecy_pairs; ++i) pairs.push_back({random_secret(rng, p), random_secret(rng, p)});
  } else {
    const auto gens = generating_secrets(p);
    for (std::size_t i = 0; i < cfg.secrecy_pairs_large; ++i) {
      const auto a = random_coefficients(rng, gens.size());
      const auto b = random_coefficients(rng, gens.size());
      pairs.push_back({combine(gens, a), combine(gens, b)});
    }
  }

  // Each maximal subset's reduced state is traced down to all of its subsets.
  const auto maximal = subsets_of(pool, top);
  std::map<std::vector<unsigned>, double> worst;
  for (std::size_t size = 0; size <= top; ++size) {
    for (const auto& s : subsets_of(pool, size)) worst[s] = 0.0;
  }
  for (const auto& [a, b] : pairs) {
    const auto da = detail::prepare(a, p, retained, cfg.cap_branches);
    const auto db = detail::prepare(b, p, retained, cfg.cap_branches);
    std::set<std::vector<unsigned>> done;
    for (const auto& big : maximal) {
      const auto ra = reduced_share_state(da, big, cfg.cap_dim);
      const auto rb = reduced_share_state(db, big, cfg.cap_dim);
      for (std::size_t size = 0; size <= top; ++size) {
        for (const auto& pick : subsets_of(big, size)) {
          if (!done.insert(pick).second) continue;
          std::vector<std::size_t> positions;
          for (unsigned participant : pick) {
            const auto at = static_cast<std::size_t>(std::find(big.begin(), big.end(), participant) - big.begin());
            for (std::size_t j = 0; j < p.m(); ++j) positions.push_back(at * p.m() + j);
          }
          const double td = size == top ? trace_distance(ra, rb)
                                        : trace_distance(ra.partial_trace(positions), rb.partial_trace(positions));
          worst[pick] = std::max(worst[pick], td);
        }
      }
    }
  }
  rec.secrets_tested = 2 * pairs.size();

  // Basis secrets on the largest sets: the view of k-1 shares is exactly uniform.
  if (method == Method::Direct && cfg.basis_exhaustive && top == p.k() - 1) {
    const auto count = *checked_pow(p.q(), p.m());
    const double level = 1.0 / static_cast<double>(*dim);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto dealt = detail::prepare(SparseState::basis(p.q(), basis_label(i, p.q(), p.m())), p, retained,
                                         cfg.cap_branches);
      for (const auto& big : maximal) {
        const auto rho = reduced_share_state(dealt, big, cfg.cap_dim);
        bool uniform = rho.entries().size() == *dim;
        for (const auto& e : rho.entries()) {
          const double want = e.row == e.col ? level : 0.0;
          uniform = uniform && std::abs(e.value - Amplitude{want, 0.0}) <= tolerance::kNormalization;
        }
        if (!uniform) {
          rec.violate("reduced state of " + detail::set_string(big) + " is not I/" + std::to_string(*dim) +
                      " (tol 1e-12)");
        }
      }
    }
    rec.basis_secrets_tested = count;
    rec.secrets_tested += count;
  }

  double max_td = 0.0;
  for (const auto& [set, td] : worst) {
    max_td = std::max(max_td, td);
    if (td > tolerance::kEquality) {
      rec.violate("trace distance " + detail::fmt(td) + " above 1e-10 on " + detail::set_string(set));
    }
  }
  if (retained == p.n()) {
    detail::check_complements(rec, p, pool, [&](const std::vector<unsigned>& s) {
      const auto it = worst.find(s);
      return it != worst.end() && it->second <= tolerance::kEquality;
    });
  }
  rec.subsets_tested = worst.size();
  rec.max_trace_distance = max_td;
  return rec;
}

/// The cost table, checked against the closed forms.
inline Record run_costs(const SchemeParams& p) {
  Record rec;
  rec.mode = "costs";
  rec.method = "formula";
  rec.cost_rows = cost_table(p);
  for (const auto& row : rec.cost_rows) {
    const double want = row.mode == "d-mode" ? static_cast<double>(p.d()) / p.m() : static_cast<double>(p.k());
    if (std::abs(row.ratio - want) > 1e-15) rec.violate(row.mode + " ratio " + std::to_string(row.ratio));
    if (row.mode == "d-mode") {
      rec.qudit_cost = row.qudits;
      rec.channel_dim = checked_pow(p.q(), row.qudits);
      rec.bound_dim = row.bound.exact ? std::optional<std::uint64_t>(row.bound.dim) : std::nullopt;
      if (!row.optimal) rec.violate("d-mode channel dimension q^d != (q^m)^{d/(d-k+1)}");
    }
  }
  if (p.d() == p.k()) {
    rec.qudit_cost = rec.cost_rows.front().qudits;
    rec.channel_dim = checked_pow(p.q(), rec.cost_rows.front().qudits);
  }
  return rec;
}

inline unsigned default_mixed_n(const SchemeParams& p) { return p.n() > p.k() ? p.n() - 1 : p.n(); }

inline RunReport run(const ScenarioConfig& cfg) {
  validate(cfg);
  RunReport report{cfg, {}};
  for (std::size_t gi = 0; gi < cfg.params.size(); ++gi) {
    const auto& g = cfg.params[gi];
    const auto p = make_params(g.k, g.d, g.q);
    auto stamp = [&](Record rec, std::chrono::steady_clock::time_point start) {
      rec.grid = g;
      rec.n = p.n();
      rec.m = p.m();
      if (cfg.timing) {
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
      report.records.push_back(std::move(rec));
    };
    auto guarded = [&](auto&& body, const std::string& mode) {
      const auto start = std::chrono::steady_clock::now();
      try {
        stamp(body(), start);
      } catch (const Error& e) {
        Record rec;
        rec.mode = mode;
        if (e.kind() == ErrorKind::EnumerationTooLarge || e.kind() == ErrorKind::DimensionCapExceeded) {
          rec.cap_exceeded(e.what());
        } else {
          rec.status = "error";
          rec.violation_count = 1;
          rec.violations.push_back(e.what());
        }
        stamp(std::move(rec), start);
      }
    };
    for (const auto& mode : cfg.modes) {
      if (mode == "encode") {
        guarded([&] { return run_encode(p, cfg, gi); }, mode);
      } else if (mode == "recover-d") {
        guarded([&] { return run_recovery(p, cfg, gi, "recover-d", p.n()); }, mode);
      } else if (mode == "recover-k") {
        // At d = k both procedures take the same k registers; one record covers them.
        if (p.d() == p.k()) continue;
        guarded([&] { return run_recovery(p, cfg, gi, "recover-k", p.n()); }, mode);
      } else if (mode == "secrecy") {
        guarded([&] { return run_secrecy(p, cfg, gi, p.n()); }, mode);
      } else if (mode == "costs") {
        guarded([&] { return run_costs(p); }, mode);
      } else if (mode == "mixed") {
        const unsigned n_prime = cfg.mixed_n.value_or(default_mixed_n(p));
        auto tag = [&](Record rec) {
          rec.mode = "mixed:" + rec.mode;
          rec.n_prime = n_prime;
          return rec;
        };
        guarded([&] { return tag(run_recovery(p, cfg, gi, "recover-k", n_prime)); }, "mixed:recover-k");
        if (p.d() <= n_prime && p.d() > p.k()) {
          guarded([&] { return tag(run_recovery(p, cfg, gi, "recover-d", n_prime)); }, "mixed:recover-d");
        }
        guarded([&] { return tag(run_secrecy(p, cfg, gi, n_prime)); }, "mixed:secrecy");
      }
    }
  }
  return report;
}

inline Json to_json(const Record& r) {
  Json j;
  j["k"] = r.grid.k;
  j["n"] = r.n;
  j["d"] = r.grid.d;
  j["q"] = r.grid.q;
  j["m"] = r.m;
  j["mode"] = r.mode;
  if (r.n_prime) j["n_prime"] = *r.n_prime;
  j["status"] = r.status;
  j["method"] = r.method;
  j["subsets_tested"] = r.subsets_tested;
  j["secrets_tested"] = r.secrets_tested;
  j["basis_secrets_tested"] = r.basis_secrets_tested;
  if (r.min_fidelity) j["min_fidelity"] = *r.min_fidelity;
  if (r.max_trace_distance) j["max_trace_distance"] = *r.max_trace_distance;
  if (r.qudit_cost) j["qudit_cost"] = *r.qudit_cost;
  if (r.channel_dim) j["channel_dim"] = *r.channel_dim;
  if (r.bound_dim) j["bound_dim"] = *r.bound_dim;
  if (r.complement_sets_checked) j["complement_sets_checked"] = *r.complement_sets_checked;
  if (!r.cost_rows.empty()) {
    Json rows = Json::array();
    for (const auto& row : r.cost_rows) {
      Json jr;
      jr["mode"] = row.mode;
      jr["participants"] = row.participants;
      jr["qudits"] = row.qudits;
      jr["ratio"] = row.ratio;
      jr["bound_dim"] = row.bound.exact ? Json(row.bound.dim) : Json(row.bound.value);
      jr["optimal"] = row.optimal;
      rows.push_back(std::move(jr));
    }
    j["cost_rows"] = std::move(rows);
  }
  j["violation_count"] = r.violation_count;
  j["violations"] = r.violations;
  if (r.wall_ms) j["wall_ms"] = *r.wall_ms;
  return j;
}

inline Json to_json(const RunReport& report) {
  const auto& c = report.config;
  Json j;
  j["schema_version"] = 1;
  Json cfg;
  Json params = Json::array();
  for (const auto& g : c.params) params.push_back({g.k, g.d, g.q});
  cfg["params"] = std::move(params);
  cfg["modes"] = c.modes;
  cfg["basis_exhaustive"] = c.basis_exhaustive;
  cfg["random_secrets"] = c.random_secrets;
  cfg["seed"] = c.seed;
  cfg["cap_branches"] = c.cap_branches;
  cfg["cap_dim"] = c.cap_dim;
  if (c.mixed_n) cfg["mixed_n"] = *c.mixed_n;
  cfg["secrecy_pairs"] = c.secrecy_pairs;
  cfg["secrecy_pairs_large"] = c.secrecy_pairs_large;
  j["config"] = std::move(cfg);
  Json records = Json::array();
  std::size_t passed = 0;
  for (const auto& r : report.records) {
    records.push_back(to_json(r));
    passed += r.passed();
  }
  j["records"] = std::move(records);
  j["summary"] = {{"records", report.records.size()},
                  {"passed", passed},
                  {"failed", report.records.size() - passed},
                  {"status", report.passed() ? "pass" : "fail"}};
  return j;
}

inline std::string to_csv(const RunReport& report) {
  std::ostringstream out;
  out << "k,n,d,q,m,mode,status,method,subsets_tested,secrets_tested,min_fidelity,max_trace_distance,qudit_cost,"
         "channel_dim,bound_dim,violation_count,first_violation\n";
  auto opt = [](const auto& v) {
    std::ostringstream s;
    s.precision(17);
    if (v) s << *v;
    return s.str();
  };
  for (const auto& r : report.records) {
    std::string first = r.violations.empty() ? "" : r.violations.front();
    std::replace(first.begin(), first.end(), '"', '\'');
    out << r.grid.k << ',' << r.n << ',' << r.grid.d << ',' << r.grid.q << ',' << r.m << ',' << r.mode << ','
        << r.status << ',' << r.method << ',' << r.subsets_tested << ',' << r.secrets_tested << ','
        << opt(r.min_fidelity) << ',' << opt(r.max_trace_distance) << ',' << opt(r.qudit_cost) << ','
        << opt(r.channel_dim) << ',' << opt(r.bound_dim) << ',' << r.violation_count << ",\"" << first << "\"\n";
  }
  return out.str();
}

inline std::string render(const RunReport& report, const std::string& format) {
  return format == "csv" ? to_csv(report) : to_json(report).dump(2) + "\n";
}

/// CSV columns k,n,d,q,m,mode,qudits,ratio,bound_dim,optimal.
inline std::string cost_table_csv(const std::vector<SchemeParams>& params) {
  std::ostringstream out;
  out << "k,n,d,q,m,mode,qudits,ratio,bound_dim,optimal\n";
  for (const auto& p : params) {
    for (const auto& row : cost_table(p)) {
      out << p.k() << ',' << p.n() << ',' << p.d() << ',' << p.q() << ',' << p.m() << ',' << row.mode << ','
          << row.qudits << ',';
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", row.ratio);
      out << buf << ',';
      if (row.bound.exact) {
        out << row.bound.dim;
      } else {
        std::snprintf(buf, sizeof buf, "%.6g", row.bound.value);
        out << buf;
      }
      out << ',' << (row.optimal ? "true" : "false") << '\n';
    }
  }
  return out.str();
}

inline Json cost_table_json(const std::vector<SchemeParams>& params) {
  Json rows = Json::array();
  for (const auto& p : params) {
    for (const auto& row : cost_table(p)) {
      Json j;
      j["k"] = p.k();
      j["n"] = p.n();
      j["d"] = p.d();
      j["q"] = p.q();
      j["m"] = p.m();
      j["mode"] = row.mode;
      j["qudits"] = row.qudits;
      j["ratio"] = row.ratio;
      j["bound_dim"] = row.bound.exact ? Json(row.bound.dim) : Json(row.bound.value);
      j["optimal"] = row.optimal;
      rows.push_back(std::move(j));
    }
  }
  return rows;
}


namespace detail {

inline std::string registers(const std::vector<std::size_t>& regs) {
  std::string out = "[";
  for (std::size_t i = 0; i < regs.size(); ++i) out += (i ? "," : "") + std::to_string(regs[i]);
  return out + "]";
}

inline void print_transcript(std::ostream& out, const RecoveryTranscript& t) {
  for (std::size_t i = 0; i < t.participants.size(); ++i) {
    out << "  receive participant " << t.participants[i] << " registers " << registers(t.accessed_registers[i]) << "\n";
  }
  for (std::size_t i = 0; i < t.operations.size(); ++i) {
    const auto& op = t.operations[i];
    out << "  step " << i + 1 << ": " << op.description << "\n";
    out << "    " << (op.kind == TranscriptOp::Kind::Affine ? "affine" : "controlled-add") << " targets "
        << registers(op.targets);
    if (!op.sources.empty()) out << " sources " << registers(op.sources);
    out << " matrix " << op.coefficients << "\n";
  }
  out << "  qudits received: " << t.qudit_cost;
  if (t.channel_dim) out << " (channel dimension " << *t.channel_dim << ")";
  out << "\n  secret registers: " << registers(t.output_registers) << "\n";
}

inline void print_factored(std::ostream& out, const RecoveryResult& r, const SparseState& secret) {
  const auto& regs = r.transcript.output_registers;
  const auto rho = partial_trace(r.state, regs, kDefaultDimCap);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", fidelity(rho, secret));
  out << "  factored: " << (factor_check(r.state, regs, secret) ? "yes" : "no") << "\n";
  out << "  fidelity: " << buf << "\n";
}

}  // namespace detail

/// Walk-through of the (2,3,3) scheme over F_5 for a secret on m = 2 digits.
inline std::string demo_intro_example(const SparseState& psi) {
  const auto p = make_params(2, 3, 5);
  if (psi.q() != p.q() || psi.register_count() != p.m()) {
    throw Error(ErrorKind::LengthMismatch, "the demo secret is a state of 2 digits over F_5");
  }
  const auto dealt = deal(psi, p);
  std::ostringstream out;
  out << "(k,n,d) = (2,3,3) over F_5, m = 2, nodes x_i = i\n";
  out << "secret:\n" << psi.dump() << "\n";
  out << "encoded state, registers (s1 s2 | s3 s4 | s5 s6) per participant, " << dealt.state.branch_count()
      << " branches:\n"
      << dealt.state.dump() << "\n";
  const auto from_d = recover_from_d(dealt, {1, 2, 3});
  out << "recovery from all 3 participants, first register each:\n";
  detail::print_transcript(out, from_d.transcript);
  detail::print_factored(out, from_d, psi);
  out << "\n";
  const auto from_k = recover_from_k(dealt, {1, 2});
  out << "recovery from participants 1 and 2, full shares:\n";
  detail::print_transcript(out, from_k.transcript);
  detail::print_factored(out, from_k, psi);
  return out.str();
}

/// Parses "10" as |10>, or "00,11" as the equal-weight superposition of the listed labels.
inline SparseState parse_demo_secret(const std::string& text) {
  std::vector<std::pair<BasisLabel, Amplitude>> branches;
  for (const auto& item : detail::split(text, ',')) {
    if (item.size() != 2 || item.find_first_not_of("01234") != std::string::npos) {
      throw Error(ErrorKind::ConfigInvalid, "demo secret '" + item + "' must be two digits in 0..4");
    }
    branches.push_back({{static_cast<Residue>(item[0] - '0'), static_cast<Residue>(item[1] - '0')}, {1.0, 0.0}});
  }
  std::set<BasisLabel> distinct;
  for (const auto& [label, amp] : branches) {
    if (!distinct.insert(label).second) throw Error(ErrorKind::ConfigInvalid, "demo secret repeats a label");
  }
  return SparseState::from_branches(5, branches);
}

}  // namespace qtss::scenario
