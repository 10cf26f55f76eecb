#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ldalink/cli.h"
#include "ldalink/corpus.h"
#include "ldalink/linkage.h"
#include "ldalink/version.h"

namespace ldalink {
namespace {

namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "ldalink");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ldalink_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SynthIsReproducible) {
  const std::vector<std::string> base = {"synth", "--d", "20", "--k", "3", "--w", "50",
                                         "--n", "40", "--seed", "7", "--render-log"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a")});
  b.insert(b.end(), {"--out", path("b")});
  ASSERT_EQ(run(a), 0);
  ASSERT_EQ(run(b), 0);
  for (const char* f : {"views.jsonl", "vocabulary.json", "truth.csv", "activity.csv"}) {
    const std::string x = slurp(dir_ / "a" / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(dir_ / "b" / f)) << f;
  }
  auto c = base;
  c[11] = "--zero-overlap";
  c[10] = "8";
  c.insert(c.end(), {"--out", path("c")});
  ASSERT_EQ(run(c), 0);
  EXPECT_NE(slurp(dir_ / "a" / "views.jsonl"), slurp(dir_ / "c" / "views.jsonl"));
}

TEST_F(CliTest, VersionInEveryOutput) {
  ASSERT_EQ(run({"synth", "--d", "10", "--k", "2", "--w", "30", "--n", "20", "--render-log",
                 "--out", path("w")}),
            0);
  ASSERT_EQ(run({"link", "--method", "js-dist", "--views", path("w/views.jsonl"), "--out",
                 path("link.csv")}),
            0);
  ASSERT_EQ(run({"eval", "--linkage", path("link.csv"), "--truth", path("w/truth.csv"), "--out",
                 path("eval.csv")}),
            0);
  for (const char* f : {"w/views.jsonl", "w/vocabulary.json", "w/truth.csv", "w/activity.csv",
                        "link.csv", "eval.csv"})
    EXPECT_NE(slurp(dir_ / f).find(kVersion), std::string::npos) << f;
}

TEST_F(CliTest, JsDistSelfMatch) {
  std::vector<View> views;
  IdentityMap truth;
  for (int i = 0; i < 8; ++i) {
    std::vector<EventCount> counts = {{i, 3}, {(i + 3) % 8, 1 + i % 2}, {8 + i % 4, 2}};
    const std::string x = "x" + std::to_string(i), y = "y" + std::to_string(i);
    views.push_back(make_view(x, Domain::kX, counts));
    views.push_back(make_view(y, Domain::kY, counts));
    truth[x] = {y};
  }
  {
    std::ofstream out(path("views.jsonl"));
    write_views(out, views);
    std::ofstream t(path("truth.csv"));
    write_truth(t, truth);
  }
  ASSERT_EQ(run({"link", "--method", "js-dist", "--views", path("views.jsonl"), "--k", "3",
                 "--out", path("link.csv")}),
            0);
  std::ifstream in(path("link.csv"));
  const LinkageResult r = read_linkage(in);
  ASSERT_EQ(r.rows.size(), 8u);
  for (const auto& row : r.rows) {
    ASSERT_FALSE(row.candidates.empty());
    EXPECT_EQ(row.candidates[0].y_id, truth.at(row.x_id)[0]);
    EXPECT_EQ(row.candidates[0].score, 0.0);
  }
  ASSERT_EQ(run({"eval", "--linkage", path("link.csv"), "--truth", path("truth.csv"), "--ks", "1",
                 "--out", path("eval.csv")}),
            0);
  EXPECT_NE(slurp(dir_ / "eval.csv").find("1,1.000000"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"synth", "--out", path("w"), "--bogus", "1"}), 1);
  EXPECT_EQ(run({"synth", "--d", "ten", "--out", path("w")}), 1);
  EXPECT_EQ(run({"synth", "--d", "10"}), 1);
  EXPECT_EQ(run({"synth", "--d", "10", "--threads", "0", "--out", path("w")}), 1);
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_EQ(run({"--version"}), 0);
}

TEST_F(CliTest, InputErrorsExitOne) {
  EXPECT_EQ(run({"fit", "--views", path("missing.jsonl"), "--out", path("m.json")}), 1);
  EXPECT_EQ(run({"link", "--method", "nope", "--views", path("missing.jsonl"), "--out",
                 path("l.csv")}),
            1);
  {
    std::ofstream out(path("broken.jsonl"));
    out << "{\"id\": \"x\", \"domain\": \"X\", \"counts\": [[0, -2]]}\n";
  }
  EXPECT_EQ(run({"link", "--method", "js-dist", "--views", path("broken.jsonl"), "--out",
                 path("l.csv")}),
            1);
  {
    std::ofstream out(path("bad.json"));
    out << "[1, 2]";
  }
  EXPECT_EQ(run({"synth", "--config", path("bad.json"), "--out", path("w")}), 1);
  EXPECT_EQ(run({"synth", "--config", path("absent.json"), "--out", path("w")}), 1);
  EXPECT_EQ(run({"synth", "--d", "2", "--n", "1", "--y-views-max", "3", "--out", path("w")}), 1);
  EXPECT_EQ(run({"sweep", "--log", path("missing.csv"), "--truth", path("t.csv"), "--out",
                 path("s.csv")}),
            1);
}

TEST_F(CliTest, FlagsOverrideConfig) {
  {
    std::ofstream out(path("cfg.json"));
    out << R"({"d": 5, "k": 2, "w": 20, "n": 30, "seed": 3})";
  }
  ASSERT_EQ(run({"synth", "--config", path("cfg.json"), "--out", path("a")}), 0);
  ASSERT_EQ(run({"synth", "--config", path("cfg.json"), "--d", "7", "--out", path("b")}), 0);
  auto count = [&](const std::string& dir) {
    std::ifstream in(dir_ / dir / "views.jsonl");
    return read_views(in).size();
  };
  EXPECT_EQ(count("a"), 10u);
  EXPECT_EQ(count("b"), 14u);
  ASSERT_EQ(run({"synth", "--d", "5", "--k", "2", "--w", "20", "--n", "30", "--seed", "3",
                 "--out", path("c")}),
            0);
  EXPECT_EQ(slurp(dir_ / "a" / "views.jsonl"), slurp(dir_ / "c" / "views.jsonl"));
}

TEST_F(CliTest, PipelineFromLog) {
  ASSERT_EQ(run({"synth", "--d", "15", "--k", "3", "--w", "80", "--n", "60", "--seed", "2",
                 "--render-log", "--out", path("w")}),
            0);
  ASSERT_EQ(run({"ingest", "--log", path("w/activity.csv"), "--spatial-digits", "2",
                 "--temporal-bins", "1", "--out", path("v")}),
            0);
  ASSERT_EQ(run({"fit", "--views", path("v/views.jsonl"), "--vocab", path("v/vocabulary.json"),
                 "--topics", "3", "--epochs", "3", "--seed", "2", "--out", path("model.json")}),
            0);
  ASSERT_EQ(run({"link", "--method", "lda-link", "--model", path("model.json"), "--views",
                 path("v/views.jsonl"), "--k", "5", "--out", path("lda.csv")}),
            0);
  ASSERT_EQ(run({"link", "--method", "pois", "--views", path("v/views.jsonl"), "--vocab",
                 path("v/vocabulary.json"), "--k", "5", "--out", path("pois.csv")}),
            0);
  ASSERT_EQ(run({"link", "--method", "nflx", "--log", path("w/activity.csv"), "--k", "5",
                 "--out", path("nflx.csv")}),
            0);
  for (const char* f : {"lda.csv", "pois.csv", "nflx.csv"})
    EXPECT_EQ(run({"eval", "--linkage", path(f), "--truth", path("w/truth.csv"), "--ks", "1,5",
                   "--out", path(std::string("eval_") + f)}),
              0)
        << f;
  EXPECT_EQ(run({"eval", "--linkage", path("lda.csv"), "--truth", path("w/truth.csv"),
                 "--cohort", "sparse:0.2", "--views", path("v/views.jsonl"), "--out",
                 path("sparse.csv")}),
            0);
  EXPECT_EQ(run({"sweep", "--log", path("w/activity.csv"), "--truth", path("w/truth.csv"),
                 "--grid", "1:1,2:2", "--methods", "js-dist", "--ks", "1", "--out",
                 path("sweep.csv")}),
            0);
  const std::string sweep = slurp(dir_ / "sweep.csv");
  EXPECT_NE(sweep.find("1,1,js-dist,1,all,"), std::string::npos);
  EXPECT_NE(sweep.find("2,2,js-dist,1,all,"), std::string::npos);
}

TEST_F(CliTest, VerifyAppendixWritesReport) {
  ASSERT_EQ(run({"verify-appendix", "--samples", "20", "--instances", "3",
                 "--concentration-trials", "2000", "--error-trials", "5", "--out",
                 path("report.json")}),
            0);
  const std::string report = slurp(dir_ / "report.json");
  for (const char* key : {"mode_bound", "fixed_point", "js_concentration", "error_exponent",
                          "surrogate_probe", kVersion})
    EXPECT_NE(report.find(key), std::string::npos) << key;
}

}  // namespace
}  // namespace ldalink
