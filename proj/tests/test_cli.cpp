#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dpl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  int dpl(const std::string& args) const {
    const std::string cmd = std::string(DPL_CLI_PATH) + " " + args + " 2>" + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stderr_text() const { return read(dir_ / "stderr.txt"); }

  static std::string read(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  }

  static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

  fs::path dir_;
};

const char* kScenario = R"(duration = 3d
sampling_interval = 1m
level = 0.5
noise_std = 0.02
seed = 3
event = spike start=1d12h length=20m magnitude=0.3
event = step start=2d length=12h magnitude=0.1
)";

} // namespace

TEST_F(Cli, SynthDetectEval) {
  write(path("scenario.txt"), kScenario);
  ASSERT_EQ(dpl("synth --scenario " + path("scenario.txt").string() + " --output " + path("stream.csv").string()), 0);
  ASSERT_EQ(dpl("detect --input " + path("stream.csv").string() + " --t-e 7d --t-c 5h --output " +
                path("out.csv").string()),
            0)
      << stderr_text();
  EXPECT_NE(stderr_text().find("samples_in=4320"), std::string::npos) << stderr_text();
  const std::string out = read(path("out.csv"));
  EXPECT_EQ(out.substr(0, out.find('\n')), "timestamp,value,score,is_anomaly,lower,upper,learned,in_warmup");

  ASSERT_EQ(dpl("eval --detections " + path("out.csv").string() + " --labels " + path("stream.csv").string() +
                " > " + path("metrics.txt").string()),
            0)
      << stderr_text();
  const std::string metrics = read(path("metrics.txt"));
  EXPECT_NE(metrics.find("event_recall = 1"), std::string::npos) << metrics;
}

TEST_F(Cli, SnapshotAndRestoreMatchFullRun) {
  write(path("scenario.txt"), kScenario);
  ASSERT_EQ(dpl("synth --scenario " + path("scenario.txt").string() + " --output " + path("stream.csv").string()), 0);
  std::ifstream in(path("stream.csv"));
  std::string header;
  std::getline(in, header);
  std::ofstream head(path("head.csv"));
  std::ofstream tail(path("tail.csv"));
  head << header << '\n';
  tail << header << '\n';
  std::string line;
  for (int i = 0; std::getline(in, line); ++i) (i < 3000 ? head : tail) << line << '\n';
  head.close();
  tail.close();

  const std::string common = " --t-e 1d --t-c 2h --warmup 6h ";
  ASSERT_EQ(dpl("detect --input " + path("stream.csv").string() + common + "--output " + path("full.csv").string()), 0);
  ASSERT_EQ(dpl("detect --input " + path("head.csv").string() + common + "--snapshot " + path("state.txt").string() +
                " --output " + path("a.csv").string()),
            0);
  ASSERT_EQ(dpl("detect --input " + path("tail.csv").string() + common + "--restore " + path("state.txt").string() +
                " --output " + path("b.csv").string()),
            0)
      << stderr_text();
  const std::string a = read(path("a.csv"));
  const std::string b = read(path("b.csv"));
  EXPECT_EQ(a + b.substr(b.find('\n') + 1), read(path("full.csv")));
}

TEST_F(Cli, StartupErrorsExitWithOne) {
  write(path("in.csv"), "timestamp,value\n2022-03-07T00:00:00Z,1\n");
  EXPECT_EQ(dpl("detect --input " + path("in.csv").string() + " --t-c 5h"), 1);
  EXPECT_EQ(dpl("detect --input " + path("missing.csv").string() + " --t-e 7d --t-c 5h"), 1);
  EXPECT_EQ(dpl("detect --input " + path("in.csv").string() + " --t-e 5h --t-c 7d"), 1);
  EXPECT_EQ(dpl("detect --input " + path("in.csv").string() + " --t-e seven --t-c 5h"), 1);
  EXPECT_NE(stderr_text().find("--t-e"), std::string::npos);
  EXPECT_EQ(dpl("detect --input " + path("in.csv").string() + " --t-e 7d --t-c 5h --value-field soc"), 1);
  write(path("bad_state.txt"), "schema_version=99\nend\n");
  EXPECT_EQ(dpl("detect --input " + path("in.csv").string() + " --t-e 7d --t-c 5h --restore " +
                path("bad_state.txt").string()),
            1);
  EXPECT_EQ(dpl("frobnicate"), 1);
  EXPECT_EQ(dpl("replicate --profile solar --output-dir " + path("x").string()), 1);
}

TEST_F(Cli, WriteFailureExitsWithTwo) {
  if (!fs::exists("/dev/full")) GTEST_SKIP() << "/dev/full not available";
  write(path("scenario.txt"), kScenario);
  ASSERT_EQ(dpl("synth --scenario " + path("scenario.txt").string() + " --output " + path("stream.csv").string()), 0);
  EXPECT_EQ(dpl("detect --input " + path("stream.csv").string() + " --t-e 7d --t-c 5h --output /dev/full"), 2);
}

TEST_F(Cli, EmptyInputSucceeds) {
  write(path("empty.csv"), "");
  EXPECT_EQ(dpl("detect --input " + path("empty.csv").string() + " --t-e 7d --t-c 5h --output " +
                path("out.csv").string()),
            0);
  EXPECT_NE(stderr_text().find("samples_in=0"), std::string::npos);
}

TEST_F(Cli, NdjsonWithSignalsFromStdin) {
  write(path("in.ndjson"), R"({"t":"2022-03-07T00:00:00Z","v":1.0,"id":"a"}
{"t":"2022-03-07T00:01:00Z","v":2.0,"id":"b"}
{"t":"2022-03-07T00:02:00Z","v":"NaN","id":"a"}
)");
  ASSERT_EQ(dpl("detect --format ndjson --output-format ndjson --timestamp-field t --value-field v --signal-field id"
                " --t-e 7d --t-c 5h < " + path("in.ndjson").string() + " > " + path("out.ndjson").string()),
            0)
      << stderr_text();
  const std::string out = read(path("out.ndjson"));
  EXPECT_NE(out.find("\"signal\":\"a\""), std::string::npos);
  EXPECT_NE(out.find("\"signal\":\"b\""), std::string::npos);
  EXPECT_NE(out.find("\"rejected\":\"non_finite\""), std::string::npos);
  EXPECT_NE(stderr_text().find("signals=2"), std::string::npos);
}

TEST_F(Cli, ReplicateWritesCaseStudy) {
  ASSERT_EQ(dpl("replicate --profile bess --output-dir " + path("bess").string() + " > " + path("m.txt").string()), 0);
  for (const char* f : {"scenario.txt", "input.csv", "detections.csv", "metrics.txt"}) {
    EXPECT_TRUE(fs::exists(path("bess") / f)) << f;
  }
  EXPECT_NE(read(path("m.txt")).find("settling_time_s"), std::string::npos);
}
