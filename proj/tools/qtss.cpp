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

// qtss: batch verification of the staircase threshold sharing scheme.
//
//   qtss run <config> [--seed N] [--out PATH] [--format json|csv] [--cap-branches N] [--cap-dim N]
//   qtss demo [--secret 10 | --secret 00,11]
//   qtss costs <k> <d> <q> [--format csv|json]
//
// Exit status: 0 all records pass, 1 some record fails, 2 bad configuration.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtss/scenario.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> cap_branches;
  std::optional<std::uint64_t> cap_dim;
};

int run_command(const RunArgs& args) {
  auto cfg = qtss::scenario::load_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out) cfg.output = *args.out;
  if (args.format) cfg.format = *args.format;
  if (args.cap_branches) cfg.cap_branches = *args.cap_branches;
  if (args.cap_dim) cfg.cap_dim = *args.cap_dim;
  qtss::scenario::validate(cfg);

  const auto report = qtss::scenario::run(cfg);
  const auto text = qtss::scenario::render(report, cfg.format);
  std::size_t passed = 0;
  for (const auto& r : report.records) passed += r.passed();
  if (cfg.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream file(cfg.output, std::ios::binary);
    if (!file) throw qtss::Error(qtss::ErrorKind::ConfigInvalid, "cannot write '" + cfg.output + "'");
    file << text;
    std::cout << "wrote " << cfg.output << "\n";
  }
  for (const auto& r : report.records) {
    if (r.passed()) continue;
    std::cerr << "FAIL (" << r.grid.k << "," << r.grid.d << "," << r.grid.q << ") " << r.mode << " [" << r.status
              << "]: " << (r.violations.empty() ? "" : r.violations.front()) << "\n";
  }
  std::cerr << passed << "/" << report.records.size() << " records pass\n";
  return report.passed() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verifier for communication-efficient quantum threshold secret sharing"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run every sweep in a scenario file");
  run->add_option("config", run_args.config, "Scenario file (key = value lines)")->required();
  run->add_option("--seed", run_args.seed, "Override the config seed");
  run->add_option("--out", run_args.out, "Write the report here instead of stdout");
  run->add_option("--format", run_args.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--cap-branches", run_args.cap_branches, "Largest state simulated branch by branch");
  run->add_option("--cap-dim", run_args.cap_dim, "Largest reduced-state dimension");

  std::string secret = "10";
  auto* demo = app.add_subcommand("demo", "Walk through the (2,3,3) example over F_5");
  demo->add_option("--secret", secret, "Two digits (10) or a comma-separated superposition (00,11)");

  unsigned k = 0, d = 0, q = 0;
  std::string cost_format = "csv";
  auto* costs = app.add_subcommand("costs", "Print the communication cost table");
  costs->add_option("k", k, "Threshold")->required();
  costs->add_option("d", d, "Shares contacted in d-mode")->required();
  costs->add_option("q", q, "Prime field size")->required();
  costs->add_option("--format", cost_format, "Table format")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*run) return run_command(run_args);
    if (*demo) {
      std::cout << qtss::scenario::demo_intro_example(qtss::scenario::parse_demo_secret(secret));
      return kExitPass;
    }
    if (*costs) {
      const auto p = qtss::make_params(k, d, q);
      if (cost_format == "json") {
        std::cout << qtss::scenario::cost_table_json({p}).dump(2) << "\n";
      } else {
        std::cout << qtss::scenario::cost_table_csv({p});
      }
      return kExitPass;
    }
  } catch (const qtss::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == qtss::ErrorKind::ConfigInvalid || *costs || *demo ? kExitConfig : kExitFail;
  }
  return kExitConfig;
}
