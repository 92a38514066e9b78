#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "wlns/csv.hpp"

namespace fs = std::filesystem;
using namespace wlns;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result wlns_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wlns_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CsvTable read_table(const fs::path& p) {
  std::ifstream is(p);
  return read_csv(is, p.string());
}

const fs::path kConfigs = fs::path(WLNS_SOURCE_DIR) / "configs";

const char* kSmallRandom =
    "[solver]\nn = 16\ndt = 0.002\nt_end = 0.02\ninitial = random\namplitude = 2\nseed = 11\nsnapshot_every = 2\n"
    "[diagnostics]\nq = 6\n[output]\nsnapshots = true\n";

}  // namespace

TEST(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(wlns_run({"--help"}).code, cli::kExitOk);
  const auto v = wlns_run({"--version"});
  EXPECT_EQ(v.code, cli::kExitOk);
  EXPECT_FALSE(v.out.empty());
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(wlns_run({}).code, cli::kExitUsage);
  EXPECT_EQ(wlns_run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(wlns_run({"recursive", "--C", "abc"}).code, cli::kExitUsage);
  EXPECT_EQ(wlns_run({"--threads", "0", "recursive"}).code, cli::kExitUsage);
}

TEST(Cli, RecursiveConvergesAndScans) {
  const auto r = wlns_run({"recursive", "--C", "2", "--beta", "2", "--w0", "0.0625", "--kmax", "4"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("converged: true"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("4,-53,"), std::string::npos) << r.out;

  const auto s = wlns_run({"recursive", "--config", (kConfigs / "recursive.cfg").string()});
  EXPECT_EQ(s.code, cli::kExitOk) << s.err;
  EXPECT_NE(s.out.find("critical_w0: ["), std::string::npos) << s.out;

  const auto d = wlns_run({"recursive", "--C", "2", "--beta", "2", "--w0", "1"});
  EXPECT_EQ(d.code, cli::kExitOk);
  EXPECT_NE(d.out.find("converged: false"), std::string::npos);
}

TEST(Cli, BadConfigReportsFileAndLine) {
  const auto dir = scratch("badcfg");
  const auto cfg = dir / "bad.cfg";
  write_file(cfg, "[solver]\nn = 16\nviscosity = fast\n");
  const auto r = wlns_run({"simulate", cfg.string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("bad.cfg:3:"), std::string::npos) << r.err;

  const auto missing = wlns_run({"simulate", (dir / "nope.cfg").string()});
  EXPECT_EQ(missing.code, cli::kExitUsage);
}

TEST(Cli, GronwallCsvErrorsAndSuccess) {
  const auto dir = scratch("gronwall");
  write_file(dir / "bad.csv", "t,B\n0,1\n0.5,oops\n");
  const auto bad = wlns_run({"gronwall", "--B", (dir / "bad.csv").string()});
  EXPECT_EQ(bad.code, cli::kExitUsage);
  EXPECT_NE(bad.err.find("bad.csv:3:"), std::string::npos) << bad.err;

  write_file(dir / "neg.csv", "t,B\n0,1\n0.5,-1\n1,0\n");
  EXPECT_EQ(wlns_run({"gronwall", "--B", (dir / "neg.csv").string()}).code, cli::kExitUsage);

  const auto ok = wlns_run({"gronwall", "--config", (kConfigs / "gronwall.cfg").string(), "--out", (dir / "h.csv").string()});
  EXPECT_EQ(ok.code, cli::kExitOk) << ok.err;
  const auto t = read_table(dir / "h.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "H", "deviation"}));
  for (const auto& row : t.rows) EXPECT_LE(std::abs(row[2]), 1e-10);

  // A huge multiplier on the identity-free model still overflows double: exit 2.
  write_file(dir / "big.csv", "t,B\n0,1000\n1,0\n");
  EXPECT_EQ(wlns_run({"gronwall", "--B", (dir / "big.csv").string(), "--C", "100"}).code, cli::kExitBlowUp);
}

TEST(Cli, CounterexampleTables) {
  const auto dir = scratch("cex");
  const auto r = wlns_run({"counterexample", "--q", "6", "--r", "2", "--terms", "40", "--out", dir.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto t = read_table(dir / "counterexample.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"n", "m_n", "k_n", "t_n", "t_n*", "term_n", "partial_claim1",
                                                "partial_claim2"}));
  ASSERT_EQ(t.rows.size(), 40u);
  const auto c1 = t.column("partial_claim1"), c2 = t.column("partial_claim2");
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    EXPECT_GT(t.rows[i][c2], t.rows[i - 1][c2]);
    EXPECT_GT(t.rows[i][c1], t.rows[i - 1][c1]);
  }
  EXPECT_LT(t.rows.back()[c1], 1.0);
  EXPECT_GT(t.rows.back()[c2], 36.0);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));

  EXPECT_EQ(wlns_run({"counterexample", "--q", "2", "--out", dir.string()}).code, cli::kExitUsage);
  EXPECT_EQ(wlns_run({"counterexample", "--r", "1", "--out", dir.string()}).code, cli::kExitUsage);
}

TEST(Cli, BlowUpExitsTwoWithTrace) {
  const auto dir = scratch("blowup");
  write_file(dir / "tg.cfg",
             "[solver]\nn = 16\ndt = 0.001\nt_end = 0.01\ninitial = taylor_green\namplitude = 1\nblowup_threshold = 0.5\n");
  const auto r = wlns_run({"simulate", (dir / "tg.cfg").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitBlowUp) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "trace.csv"));
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(m["exit_code"], 2);
}

TEST(Cli, ShippedTaylorGreenDecaysExactly) {
  const auto dir = scratch("tg");
  const auto r = wlns_run({"simulate", (kConfigs / "taylor-green.cfg").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto steps = read_table(dir / "steps.csv");
  const auto ct = steps.column("t"), ce = steps.column("energy");
  const double e0 = steps.rows.front()[ce];
  for (const auto& row : steps.rows) EXPECT_NEAR(row[ce], e0 * std::exp(-4.0 * row[ct]), 1e-6 * e0);

  const auto trace = read_table(dir / "trace.csv");
  EXPECT_EQ(trace.rows.size(), 11u);
  EXPECT_EQ(trace.header.front(), "t");

  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["exit_code"], 0);
  bool has_trace = false;
  for (const auto& f : m["files"]) has_trace |= f["path"] == "trace.csv";
  EXPECT_TRUE(has_trace);

  // Re-diagnosing the stored snapshots reproduces the trace.
  const auto d = wlns_run({"diagnose", dir.string(), "--out", (dir / "diag").string(), "--q", "6"});
  ASSERT_EQ(d.code, cli::kExitOk) << d.err;
  EXPECT_EQ(slurp(dir / "diag" / "trace.csv"), slurp(dir / "trace.csv"));
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  const auto dir = scratch("threads");
  write_file(dir / "r.cfg", kSmallRandom);
  ASSERT_EQ(wlns_run({"--threads", "1", "simulate", (dir / "r.cfg").string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(wlns_run({"--threads", "4", "simulate", (dir / "r.cfg").string(), "--out", (dir / "b").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
  EXPECT_EQ(slurp(dir / "a" / "steps.csv"), slurp(dir / "b" / "steps.csv"));
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "b" / "manifest.json"))["threads"], 4);
}

TEST(Cli, ThreadsFromEnvironment) {
  const auto dir = scratch("env");
  write_file(dir / "r.cfg", kSmallRandom);
  ::setenv("WLNS_THREADS", "3", 1);
  const auto r = wlns_run({"simulate", (dir / "r.cfg").string(), "--out", (dir / "o").string()});
  ::unsetenv("WLNS_THREADS");
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "o" / "manifest.json"))["threads"], 3);
  // The flag wins over the environment.
  ::setenv("WLNS_THREADS", "3", 1);
  ASSERT_EQ(wlns_run({"--threads", "2", "simulate", (dir / "r.cfg").string(), "--out", (dir / "p").string()}).code, 0);
  ::unsetenv("WLNS_THREADS");
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "p" / "manifest.json"))["threads"], 2);
}
