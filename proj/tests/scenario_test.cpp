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

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "qtss/scenario.hpp"

namespace {

namespace sc = qtss::scenario;
using qtss::ErrorKind;

template <typename Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const qtss::Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigInvalid";
  return {};
}

const sc::Record& find(const sc::RunReport& r, const std::string& mode) {
  for (const auto& rec : r.records) {
    if (rec.mode == mode) return rec;
  }
  throw std::runtime_error("no record for " + mode);
}

struct Command {
  int status;
  std::string output;
};

/// Runs a shell command, capturing stdout and stderr together.
Command shell(const std::string& cmd) {
  Command out{0, {}};
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return {-1, {}};
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return out;
}

std::string cli() { return std::string(QTSS_CLI_PATH); }
std::string config(const std::string& name) { return std::string(QTSS_CONFIG_DIR) + "/" + name; }

TEST(ParseConfig, FullExample) {
  const auto cfg = sc::parse_config(
      "# sweep\n"
      "params  = 2,3,5; 3,4,7   # two entries\n"
      "modes   = secrecy, encode\n"
      "secrets = random:7\n"
      "seed    = 42\n"
      "format  = csv\n"
      "cap_dim = 99\n"
      "mixed_n = 4\n"
      "timing  = true\n");
  ASSERT_EQ(cfg.params.size(), 2u);
  EXPECT_EQ(cfg.params[1], (sc::GridEntry{3, 4, 7}));
  EXPECT_EQ(cfg.modes, (std::vector<std::string>{"encode", "secrecy"}));
  EXPECT_FALSE(cfg.basis_exhaustive);
  EXPECT_EQ(cfg.random_secrets, 7u);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.format, "csv");
  EXPECT_EQ(cfg.cap_dim, 99u);
  EXPECT_EQ(cfg.mixed_n, 4u);
  EXPECT_TRUE(cfg.timing);
}

TEST(ParseConfig, Defaults) {
  const auto cfg = sc::parse_config("params = 2,3,5\n");
  EXPECT_EQ(cfg.modes, sc::all_modes());
  EXPECT_TRUE(cfg.basis_exhaustive);
  EXPECT_EQ(cfg.random_secrets, 20u);
  EXPECT_EQ(cfg.format, "json");
  EXPECT_FALSE(cfg.mixed_n);
  EXPECT_FALSE(cfg.timing);
}

TEST(ParseConfig, Errors) {
  EXPECT_NE(error_of([] { sc::parse_config("params = 3,4,5\n"); }).find("q"), std::string::npos);
  EXPECT_NE(error_of([] { sc::parse_config("params = 2,3,5\ncolour = red\n"); }).find("line 2"),
            std::string::npos);
  EXPECT_NE(error_of([] { sc::parse_config("seed = 1\nseed = 2\nparams = 2,3,5\n"); }).find("twice"),
            std::string::npos);
  error_of([] { sc::parse_config("params = 2,3,5\nmixed_n = 1\n"); });
  error_of([] { sc::parse_config("params = 2,3,5\nmixed_n = 4\n"); });
  error_of([] { sc::parse_config("params = 2,3,5\nmodes = encode, teleport\n"); });
  error_of([] { sc::parse_config("params = 2,3\n"); });
  error_of([] { sc::parse_config("params = 2,3,5\nseed = -1\n"); });
  error_of([] { sc::parse_config("params 2,3,5\n"); });
  error_of([] { sc::parse_config("modes = all\n"); });
  error_of([] { sc::load_config("/nonexistent/qtss.conf"); });
}

TEST(ParseConfig, ShippedConfigsLoad) {
  for (const char* name : {"intro.conf", "degenerate.conf", "grid.conf", "small.conf"}) {
    EXPECT_NO_THROW(sc::load_config(config(name))) << name;
  }
  EXPECT_EQ(sc::load_config(config("grid.conf")).params.size(), 7u);
  error_of([] { sc::load_config(config("invalid.conf")); });
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
  sc::CounterRng a(5, 1), b(5, 1), c(5, 2), d(6, 1);
  for (int i = 0; i < 50; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
    EXPECT_NE(x, d.next());
  }
  sc::CounterRng u(9, 9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LE(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(SubsetsOf, CountsAndOrder) {
  const auto s = sc::subsets_of({1, 2, 3, 4}, 2);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_EQ(s.front(), (std::vector<unsigned>{1, 2}));
  EXPECT_EQ(s.back(), (std::vector<unsigned>{3, 4}));
  EXPECT_EQ(sc::subsets_of({1, 2, 3, 4, 5, 6, 7}, 3).size(), 35u);
  EXPECT_EQ(sc::subsets_of({1, 2}, 0).size(), 1u);
}

TEST(ChooseMethod, GridEntries) {
  auto method = [](unsigned k, unsigned d, unsigned q) {
    return sc::choose_method(qtss::make_params(k, d, q), qtss::kDefaultBranchCap);
  };
  EXPECT_EQ(method(2, 3, 5), sc::Method::Direct);
  EXPECT_EQ(method(3, 4, 7), sc::Method::Direct);
  EXPECT_EQ(method(3, 5, 7), sc::Method::Linearity);
  EXPECT_EQ(method(4, 5, 11), sc::Method::Linearity);
  EXPECT_EQ(method(4, 7, 11), sc::Method::Affine);
}

TEST(Run, IntroExampleAllModes) {
  const auto report = sc::run(sc::load_config(config("intro.conf")));
  for (const auto& r : report.records) EXPECT_TRUE(r.passed()) << r.mode << ": " << r.status;
  const auto& d = find(report, "recover-d");
  EXPECT_EQ(d.qudit_cost, 3u);
  EXPECT_EQ(d.channel_dim, 125u);
  EXPECT_EQ(d.bound_dim, 125u);
  EXPECT_EQ(d.subsets_tested, 1u);
  EXPECT_EQ(d.basis_secrets_tested, 25u);
  EXPECT_NEAR(*d.min_fidelity, 1.0, 1e-9);
  const auto& k = find(report, "recover-k");
  EXPECT_EQ(k.qudit_cost, 4u);
  EXPECT_EQ(k.subsets_tested, 3u);
  const auto& s = find(report, "secrecy");
  EXPECT_LE(*s.max_trace_distance, 1e-9);
  EXPECT_GT(*s.complement_sets_checked, 0u);
  EXPECT_EQ(find(report, "mixed:recover-k").n_prime, 2u);
  EXPECT_TRUE(report.passed());
}

TEST(Run, DegenerateHasOneRecoveryRecord) {
  const auto report = sc::run(sc::load_config(config("degenerate.conf")));
  std::size_t recovery = 0;
  for (const auto& r : report.records) {
    EXPECT_TRUE(r.passed()) << r.mode;
    recovery += r.mode == "recover-d" || r.mode == "recover-k";
  }
  EXPECT_EQ(recovery, 1u);
  EXPECT_EQ(find(report, "recover-d").qudit_cost, 2u);
}

// The same sweep under each verification tier reaches the same verdict.
TEST(Run, TiersAgree) {
  for (std::uint64_t cap : {std::uint64_t{qtss::kDefaultBranchCap}, std::uint64_t{7203}, std::uint64_t{100}}) {
    auto cfg = sc::parse_config("params = 3,4,7\nmodes = recover-k, recover-d, secrecy\nsecrets = random:3\n");
    cfg.cap_branches = cap;
    const auto report = sc::run(cfg);
    for (const auto& r : report.records) {
      EXPECT_TRUE(r.passed()) << cap << " " << r.mode << ": "
                              << (r.violations.empty() ? r.status : r.violations.front());
    }
    const std::string want = cap == 100 ? "affine" : cap == 7203 ? "linearity" : "direct";
    EXPECT_EQ(find(report, "recover-k").method, want) << cap;
  }
}

TEST(Run, CapExceededIsReported) {
  auto cfg = sc::parse_config("params = 2,3,5\nmodes = recover-d\n");
  cfg.cap_dim = 1;
  const auto report = sc::run(cfg);
  EXPECT_FALSE(report.passed());
  EXPECT_EQ(report.records.front().status, "cap_exceeded");
  EXPECT_EQ(report.records.front().violations.front().rfind("CapExceeded", 0), 0u);
}

TEST(Run, Deterministic) {
  const auto cfg = sc::load_config(config("small.conf"));
  const auto a = sc::to_json(sc::run(cfg)).dump();
  const auto b = sc::to_json(sc::run(cfg)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("wall_ms"), std::string::npos);
  auto other = cfg;
  other.seed = 100;
  EXPECT_NE(a, sc::to_json(sc::run(other)).dump());
}

TEST(Report, JsonShape) {
  auto cfg = sc::parse_config("params = 2,3,5\nmodes = costs\ntiming = true\n");
  const auto j = sc::to_json(sc::run(cfg));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["summary"]["records"], 1);
  EXPECT_EQ(j["summary"]["status"], "pass");
  const auto& rec = j["records"][0];
  EXPECT_TRUE(rec.contains("wall_ms"));
  EXPECT_EQ(rec["cost_rows"].size(), 2u);
  EXPECT_EQ(rec["cost_rows"][1]["bound_dim"], 125);
}

TEST(Report, CsvHasOneLinePerRecord) {
  const auto report = sc::run(sc::parse_config("params = 2,3,5; 2,2,5\nmodes = costs, encode\n"));
  const auto csv = sc::to_csv(report);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("k,n,d,q,m,mode,status", 0), 0u);
}

TEST(CostTable, Rows) {
  EXPECT_EQ(sc::cost_table_csv({qtss::make_params(2, 3, 5)}),
            "k,n,d,q,m,mode,qudits,ratio,bound_dim,optimal\n"
            "2,3,3,5,2,k-mode,4,2,625,true\n"
            "2,3,3,5,2,d-mode,3,1.5,125,true\n");
  const auto seven = sc::cost_table_json({qtss::make_params(3, 5, 7)});
  EXPECT_NEAR(seven[1]["ratio"].get<double>(), 5.0 / 3.0, 1e-15);
  const auto eleven = sc::cost_table_json({qtss::make_params(4, 6, 11)});
  EXPECT_EQ(eleven[1]["ratio"].get<double>(), 2.0);
  EXPECT_EQ(eleven[1]["qudits"], 6);
}

TEST(Demo, ParseSecret) {
  EXPECT_EQ(sc::parse_demo_secret("10").branch_count(), 1u);
  EXPECT_EQ(sc::parse_demo_secret("00,11").branch_count(), 2u);
  error_of([] { sc::parse_demo_secret("105"); });
  error_of([] { sc::parse_demo_secret("17"); });
  error_of([] { sc::parse_demo_secret("11,11"); });
}

TEST(Cli, RunExitCodes) {
  auto ok = shell(cli() + " run " + config("intro.conf"));
  EXPECT_EQ(ok.status, 0) << ok.output;
  EXPECT_NE(ok.output.find("records pass"), std::string::npos);
  EXPECT_NE(ok.output.find("\"schema_version\": 1"), std::string::npos);

  EXPECT_EQ(shell(cli() + " run " + config("invalid.conf")).status, 2);
  EXPECT_EQ(shell(cli() + " run /nonexistent.conf").status, 2);
  EXPECT_EQ(shell(cli() + " run " + config("intro.conf") + " --format xml").status, 2);
  EXPECT_EQ(shell(cli()).status, 2);

  auto capped = shell(cli() + " run " + config("intro.conf") + " --cap-dim 1 --format csv");
  EXPECT_EQ(capped.status, 1);
  EXPECT_NE(capped.output.find("CapExceeded"), std::string::npos);
}

TEST(Cli, RunWritesFile) {
  const std::string path = ::testing::TempDir() + "qtss_report.csv";
  std::remove(path.c_str());
  auto r = shell(cli() + " run " + config("small.conf") + " --format csv --seed 5 --out " + path);
  EXPECT_EQ(r.status, 0) << r.output;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str().rfind("k,n,d,q,m,mode", 0), 0u);
}

TEST(Cli, Demo) {
  auto r = shell(cli() + " demo");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("25 branches"), std::string::npos);
  EXPECT_NE(r.output.find("fidelity: 1.0000000000"), std::string::npos);

  auto zero = shell(cli() + " demo --secret 00");
  EXPECT_EQ(zero.status, 0);
  EXPECT_NE(zero.output.find("000000 : "), std::string::npos);

  auto sup = shell(cli() + " demo --secret 00,11");
  EXPECT_EQ(sup.status, 0);
  EXPECT_EQ(sup.output.find("fidelity: 0."), std::string::npos) << sup.output;

  EXPECT_EQ(shell(cli() + " demo --secret 9").status, 2);
}

TEST(Cli, Costs) {
  auto r = shell(cli() + " costs 3 5 7");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("3,5,5,7,3,d-mode,5,1.66667,"), std::string::npos) << r.output;
  EXPECT_EQ(shell(cli() + " costs 3 4 5").status, 2);
  EXPECT_NE(shell(cli() + " costs 4 6 11 --format json").output.find("\"ratio\": 2.0"), std::string::npos);
}

}  // namespace
