#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nes/cli.hpp"
#include "nes/prompt.hpp"
#include "support.hpp"

using namespace nes;
namespace fs = std::filesystem;
namespace sc = nes::testing::scenario;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "nes");
  std::vector<const char *> argv;
  for (const auto &a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("nes_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string &name, const std::string &content) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  static std::string read(const std::string &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  std::string scenario_log() {
    const std::vector<std::vector<std::string>> states = {sc::before_seed(), sc::after_seed(), sc::after_primary(),
                                                          sc::after_secondary(), sc::after_call_sites()};
    std::string log;
    for (std::size_t i = 1; i < states.size(); ++i) {
      log += format_event(EditEvent{CodeSnapshot{sc::text(states[i - 1]), std::nullopt, "TypeScript"},
                                    CodeSnapshot{sc::text(states[i]), std::nullopt, "TypeScript"},
                                    static_cast<std::int64_t>(i)}) +
             "\n";
    }
    return write("scenario.jsonl", log);
  }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, DiffPrintsNesFormat) {
  const auto a = write("a.py", "def Hello()\n  print(\"Say\")\n  print(\"Hello\")\n");
  const auto b = write("b.py", "def GoodBye()\n  print(\"Say\")\n  print(\"GoodBye\")\n");
  const auto r = run({"diff", a, b});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "1-| def Hello()\n1+| def GoodBye()\n2 |   print(\"Say\")\n3-|   print(\"Hello\")\n3+|   print(\"GoodBye\")\n");
}

TEST_F(Cli, DiffOfIdenticalFilesIsEmpty) {
  const auto a = write("a", "x\n");
  EXPECT_EQ(run({"diff", a, a}).out, "");
}

TEST_F(Cli, ReplayEmptyLog) {
  const auto r = run({"replay", write("empty.jsonl", "")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "");
}

TEST_F(Cli, ReplayScenario) {
  const auto r = run({"replay", scenario_log(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 4U);
  EXPECT_EQ(j[0], "5+|   'aria-label': string;");
  const auto text = run({"replay", scenario_log()});
  EXPECT_NE(text.out.find("# edit 4\n22-|"), std::string::npos) << text.out;
}

TEST_F(Cli, ReplayBadLogIsOperationalError) {
  const auto r = run({"replay", write("bad.jsonl", "{\"ts\": 1}\n")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("SchemaError"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"diff", "only-one"}).code, 2);
  EXPECT_EQ(run({"replay", "/does/not/exist.jsonl"}).code, 2);
  const auto r = run({"dataset", "build", "--events", scenario_log(), "--out", path("o.jsonl"), "--keep-ratio", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, Help) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("mock-backend"), std::string::npos);
}

TEST_F(Cli, DatasetBuildLocationChange) {
  const auto out = path("ds.jsonl");
  const auto r = run({"dataset", "build", "--events", scenario_log(), "--out", out, "--labeling-mode",
                      "location_change", "--keep-ratio", "0", "--radius", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto samples = read_dataset(out);
  ASSERT_EQ(samples.size(), 3U);
  EXPECT_EQ(samples[1].gt_location, Location::at(11));
  EXPECT_EQ(samples[0].meta.labeling_mode, LabelingMode::location_change);

  // A wider window swallows the jump from lines 8-9 to line 11.
  ASSERT_EQ(run({"dataset", "build", "--events", scenario_log(), "--out", out, "--labeling-mode", "location_change",
                 "--keep-ratio", "0", "--radius", "2"})
                .code,
            0);
  EXPECT_EQ(read_dataset(out).size(), 2U);
}

TEST_F(Cli, DatasetBuildWithScriptedJudge) {
  const auto table = write("judge.jsonl", format_mock_entry(ScriptedResponse{"*", "RELEVANT\nsame refactor", 0}) + "\n");
  const auto out = path("ds.jsonl");
  const auto r = run({"dataset", "build", "--events", scenario_log(), "--out", out, "--mock-table", table,
                      "--keep-ratio", "0", "--seed", "4", "--history-window", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto samples = read_dataset(out);
  ASSERT_EQ(samples.size(), 3U);
  EXPECT_EQ(samples[2].history.size(), 2U);
  EXPECT_EQ(samples[0].meta.seed, 4U);
}

TEST_F(Cli, DatasetBuildNeedsJudge) {
  EXPECT_EQ(run({"dataset", "build", "--events", scenario_log(), "--out", path("ds.jsonl")}).code, 2);
}

TEST_F(Cli, DatasetBuildQuarantine) {
  const auto table = write("judge.jsonl", format_mock_entry(ScriptedResponse{"*", "hmm", 0}) + "\n");
  const auto q = path("q.jsonl");
  const auto r = run({"dataset", "build", "--events", scenario_log(), "--out", path("ds.jsonl"), "--mock-table", table,
                      "--keep-ratio", "0", "--quarantine", q});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(read_dataset(path("ds.jsonl")).empty());
  std::istringstream lines(read(q));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) {
    EXPECT_NE(nlohmann::json::parse(line)["quarantine_reason"].get<std::string>().find("UnparseableVerdict"),
              std::string::npos);
    ++n;
  }
  EXPECT_EQ(n, 3U);
}

TEST_F(Cli, EvalRunWithOracleTable) {
  const auto data = nes::testing::synthetic_dataset(60, TaskKind::edit, 3);
  const auto ds = path("eval.jsonl");
  write_dataset(data, ds);
  std::string table;
  for (const auto &e : nes::testing::oracle_table(data, TaskKind::edit, {std::nullopt, 1, 3})) {
    table += format_mock_entry(e) + "\n";
  }
  const auto tpath = write("oracle.jsonl", table);

  const auto md = run({"eval", "run", "--dataset", ds, "--mock-table", tpath});
  ASSERT_EQ(md.code, 0) << md.err;
  EXPECT_NE(md.out.find("100.00/100.0%"), std::string::npos) << md.out;

  const auto sweep = run({"eval", "run", "--dataset", ds, "--mock-table", tpath, "--sweep", "1,3", "--format", "json"});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  const auto parsed = nlohmann::json::parse(sweep.out);
  ASSERT_EQ(parsed.size(), 2U);
  EXPECT_EQ(parsed[0]["history_window"], 1);
  EXPECT_EQ(parsed[1]["history_window"], 3);
  EXPECT_EQ(parsed[1]["n_errors"], 0);

  const auto out = path("report.csv");
  ASSERT_EQ(run({"eval", "run", "--dataset", ds, "--mock-table", tpath, "--format", "csv", "--out", out}).code, 0);
  EXPECT_EQ(read(out).rfind("language,split,n,acc,es,emr\n", 0), 0U);
}

TEST_F(Cli, EvalErrorRateThreshold) {
  const auto data = nes::testing::synthetic_dataset(20, TaskKind::edit, 4);
  const auto ds = path("eval.jsonl");
  write_dataset(data, ds);
  const auto empty_table = write("none.jsonl", "");
  const auto r = run({"eval", "run", "--dataset", ds, "--mock-table", empty_table});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("errors: 20"), std::string::npos) << r.out;
  EXPECT_EQ(run({"eval", "run", "--dataset", ds, "--mock-table", empty_table, "--max-error-rate", "1"}).code, 0);
}

TEST_F(Cli, EvalTaskMismatchIsOperationalError) {
  const auto ds = path("eval.jsonl");
  write_dataset(nes::testing::synthetic_dataset(5, TaskKind::edit, 5), ds);
  const auto r = run({"eval", "run", "--dataset", ds, "--mock-table", write("t.jsonl", ""), "--task", "location"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("DatasetError"), std::string::npos);
}

TEST_F(Cli, ServeNeedsBackend) { EXPECT_EQ(run({"serve"}).code, 2); }

TEST_F(Cli, ConfigPrecedence) {
  const auto cfg = write("nes.toml", "[dataset.build]\nkeep-ratio = 0.5\nseed = 11\nhistory-window = 4\n");
  const std::vector<std::string> base = {"--config", cfg,   "dataset", "build", "--events",
                                         scenario_log(), "--out", path("o.jsonl"), "--dump-config"};

  auto r = run(base);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dataset.build.keep-ratio=0.5"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("dataset.build.seed=11"), std::string::npos);

  ::setenv("NES_KEEP_RATIO", "0.3", 1);
  r = run(base);
  EXPECT_NE(r.out.find("dataset.build.keep-ratio=0.3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("dataset.build.history-window=4"), std::string::npos);

  auto with_flag = base;
  with_flag.insert(with_flag.end(), {"--keep-ratio", "0.25"});
  r = run(with_flag);
  EXPECT_NE(r.out.find("dataset.build.keep-ratio=0.25"), std::string::npos) << r.out;
  ::unsetenv("NES_KEEP_RATIO");
  EXPECT_EQ(r.out.find("dump-config"), std::string::npos);
}
