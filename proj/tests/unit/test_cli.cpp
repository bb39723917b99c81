#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "spatialrl/image.hpp"
#include "spatialrl/io.hpp"
#include "spatialrl/synthetic.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spatialrl;

namespace {

const fs::path kFixtures = SPATIALRL_FIXTURES;

struct Result {
  int code = -1;
  std::string err;
};

// Runs the CLI with stderr captured to a file.
Result cli(const TempDir& scratch, const std::string& args) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd =
      std::string(SPATIALRL_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_png(const fs::path& path, const Frame& f) {
  const auto bytes = encode_png(f);
  write_file_atomic(path, std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  TempDir t;
  EXPECT_EQ(cli(t, "").code, 2);
  EXPECT_EQ(cli(t, "frobnicate").code, 2);
  EXPECT_EQ(cli(t, "keyframes").code, 2);
  EXPECT_EQ(cli(t, "--config " + q(t / "none.json") + " filter --out " + q(t / "o")).code, 2);
}

TEST(Cli, SingleFrameManifest) {
  TempDir t;
  fs::create_directories(t / "clip");
  write_png(t / "clip" / "frame_0000.png", synthetic::textured_scene(96, 72, 4));
  const auto r = cli(t, "keyframes " + q(t / "clip") + " --out " + q(t / "out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json line = json::parse(slurp(t / "out" / "manifest.jsonl"));
  EXPECT_EQ(line["indices"], json::array({0}));
  EXPECT_EQ(line["source_id"], "clip");
  EXPECT_TRUE(fs::exists(t / "out" / "frames" / "clip" / "kf_000000.png"));
}

TEST(Cli, CorruptFrameExitsTwo) {
  TempDir t;
  fs::create_directories(t / "clip");
  write_png(t / "clip" / "frame_0000.png", synthetic::textured_scene(96, 72, 4));
  std::ofstream(t / "clip" / "frame_0001.png") << "garbage";
  const auto r = cli(t, "keyframes " + q(t / "clip") + " --out " + q(t / "out"));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, FixturePanMatchesCommittedSelection) {
  TempDir t;
  const auto r = cli(t, "keyframes " + q(kFixtures / "videos" / "pan_east") + " --out " +
                            q(t / "out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json line = json::parse(slurp(t / "out" / "manifest.jsonl"));
  EXPECT_EQ(line["indices"], json::array({0, 9, 17, 23}));
}

TEST(Cli, PerceiveMissingManifestExitsTwo) {
  TempDir t;
  const auto r = cli(t, "--mock-client perceive --manifest " + q(t / "absent.jsonl") +
                            " --questions " + q(kFixtures / "questions.jsonl") + " --out " +
                            q(t / "tr"));
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, PerceiveResumesWithoutDuplicates) {
  TempDir t;
  const std::string config = "--config " + q(kFixtures / "config.json") + " --mock-client ";
  ASSERT_EQ(cli(t, config + "keyframes " + q(kFixtures / "videos") + " --out " + q(t / "kf")).code,
            0);
  const std::string perceive = config + "perceive --manifest " + q(t / "kf" / "manifest.jsonl") +
                               " --out " + q(t / "tr");
  ASSERT_EQ(cli(t, perceive).code, 0);
  const std::string first = slurp(t / "tr" / "q004.transcript.jsonl");
  const std::string untouched = slurp(t / "tr" / "q001.transcript.jsonl");
  ASSERT_FALSE(first.empty());
  // Simulate an interrupted run that never wrote q004.
  fs::remove(t / "tr" / "q004.transcript.jsonl");
  const auto mtime = fs::last_write_time(t / "tr" / "q001.transcript.jsonl");
  ASSERT_EQ(cli(t, perceive).code, 0);
  EXPECT_EQ(slurp(t / "tr" / "q004.transcript.jsonl"), first);
  EXPECT_EQ(slurp(t / "tr" / "q001.transcript.jsonl"), untouched);
  EXPECT_EQ(fs::last_write_time(t / "tr" / "q001.transcript.jsonl"), mtime);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(t / "tr")) {
    if (e.path().string().ends_with(".transcript.jsonl")) ++files;
  }
  EXPECT_EQ(files, 8u);
}

TEST(Cli, PerceiveFailuresAreReported) {
  TempDir t;
  ASSERT_EQ(cli(t, "keyframes " + q(kFixtures / "videos" / "zoom_in") + " --out " + q(t / "kf"))
                .code,
            0);
  std::ofstream(t / "config.json")
      << R"({"perception": {"client": {"endpoint": "http://127.0.0.1:1", "max_retries": 0}}})";
  const auto r = cli(t, "--config " + q(t / "config.json") + " perceive --manifest " +
                            q(t / "kf" / "manifest.jsonl") + " --questions " +
                            q(kFixtures / "questions.jsonl") + " --out " + q(t / "tr"));
  EXPECT_EQ(r.code, 1) << r.err;
  // q007 and q008 reach the unreachable client; the rest have no manifest entry.
  std::size_t transport = 0, unindexed = 0;
  for (const auto& line : split_lines(slurp(t / "tr" / "failures.jsonl"))) {
    const std::string error = json::parse(line)["error"];
    transport += error.find("connection") != std::string::npos;
    unindexed += error.find("not in manifest") != std::string::npos;
  }
  EXPECT_EQ(transport, 2u);
  EXPECT_EQ(unindexed, 6u);
}

TEST(Cli, EvalEmptyPredictionsWarns) {
  TempDir t;
  std::ofstream(t / "empty.jsonl") << "";
  const auto r = cli(t, "eval --questions " + q(kFixtures / "questions.jsonl") +
                            " --predictions " + q(t / "empty.jsonl") + " --out " + q(t / "rep"));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const json report = json::parse(slurp(t / "rep" / "report.json"));
  EXPECT_EQ(report["correct"], 0);
  EXPECT_EQ(report["total"], 8);
  EXPECT_TRUE(fs::exists(t / "rep" / "report.txt"));
}

TEST(Cli, EvalPerfectPredictions) {
  TempDir t;
  std::string preds;
  for (const auto& line : split_lines(slurp(kFixtures / "questions.jsonl"))) {
    const json j = json::parse(line);
    preds += json{{"id", j["id"]}, {"prediction", j["answer"]}}.dump() + "\n";
  }
  std::ofstream(t / "p.jsonl") << preds;
  ASSERT_EQ(cli(t, "eval --questions " + q(kFixtures / "questions.jsonl") + " --predictions " +
                       q(t / "p.jsonl") + " --out " + q(t / "rep"))
                .code,
            0);
  const json report = json::parse(slurp(t / "rep" / "report.json"));
  EXPECT_EQ(report["category_mean"], 1.0);
}

TEST(Cli, FilterFixture) {
  TempDir t;
  const auto r = cli(t, "filter --questions " + q(kFixtures / "questions.jsonl") +
                            " --judgments " + q(kFixtures / "judgments.jsonl") + " --out " +
                            q(t / "f"));
  ASSERT_EQ(r.code, 0) << r.err;
  // Excluded: finetuned and not original, i.e. q002, q005, q008.
  std::vector<std::string> excluded;
  for (const auto& line : split_lines(slurp(t / "f" / "excluded.jsonl"))) {
    excluded.push_back(json::parse(line)["id"]);
  }
  EXPECT_EQ(excluded, (std::vector<std::string>{"q002", "q005", "q008"}));
  EXPECT_EQ(split_lines(slurp(t / "f" / "kept.jsonl")).size(), 5u);
  EXPECT_EQ(split_lines(slurp(t / "f" / "flagged.jsonl")).size(), 2u);
}

TEST(Cli, TrainToyZeroLearningRateIsFlat) {
  TempDir t;
  ASSERT_EQ(cli(t, "train-toy --learning-rate 0 --epochs 1 --out " + q(t / "run")).code, 0);
  const auto lines = split_lines(slurp(t / "run" / "metrics.jsonl"));
  ASSERT_EQ(lines.size(), 40u);
  const double first = json::parse(lines.front())["expected_accuracy"];
  for (const auto& l : lines) EXPECT_EQ(json::parse(l)["expected_accuracy"].get<double>(), first);
  EXPECT_TRUE(fs::exists(t / "run" / "policy.json"));
}

TEST(Cli, TrainToyLogsTwoStageSwitches) {
  TempDir t;
  const fs::path err = t / "train.txt";
  ASSERT_EQ(std::system((std::string(SPATIALRL_CLI) + " train-toy --epochs 12 --out " +
                         q(t / "run") + " 2>&1 >" + err.string())
                            .c_str()),
            0);
  const std::string log = slurp(err);
  EXPECT_NE(log.find("stage 2 from epoch 3"), std::string::npos) << log;
  EXPECT_NE(log.find("stage 3 from epoch 5"), std::string::npos) << log;
  EXPECT_EQ(log.find("stage 4"), std::string::npos);
}

TEST(Cli, TrainToyDivergenceExitsOne) {
  TempDir t;
  const auto r = cli(t, "train-toy --kl-coef 1000 --out " + q(t / "run"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("step"), std::string::npos);
}

TEST(Cli, CommandsAreIdempotent) {
  TempDir t;
  for (const char* run : {"a", "b"}) {
    const fs::path out = t / run;
    ASSERT_EQ(cli(t, "--mock-client keyframes " + q(kFixtures / "videos") + " --out " +
                         q(out / "kf"))
                  .code,
              0);
    ASSERT_EQ(cli(t, "--config " + q(kFixtures / "config.json") + " filter --out " +
                         q(out / "f"))
                  .code,
              0);
    ASSERT_EQ(cli(t, "--config " + q(kFixtures / "config.json") + " split --out " +
                         q(out / "s"))
                  .code,
              0);
  }
  EXPECT_EQ(slurp(t / "a" / "kf" / "manifest.jsonl"), slurp(t / "b" / "kf" / "manifest.jsonl"));
  EXPECT_EQ(slurp(t / "a" / "s" / "folds.jsonl"), slurp(t / "b" / "s" / "folds.jsonl"));
  EXPECT_EQ(slurp(t / "a" / "f" / "kept.jsonl"), slurp(t / "b" / "f" / "kept.jsonl"));
  EXPECT_EQ(slurp(t / "a" / "kf" / "frames" / "pan_east" / "kf_000009.png"),
            slurp(t / "b" / "kf" / "frames" / "pan_east" / "kf_000009.png"));
}
