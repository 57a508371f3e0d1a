#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "revq/io/image.hpp"
#include "revq/io/video_io.hpp"
#include "revq/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = REVQ_CLI_PATH;

// Desk-scale model: small fragments and a crop that fits 64x48 clips.
const std::string kSmall =
    " --set sampler.clips=2 --set sampler.frames_per_clip=2 --set sampler.grid=2 --set sampler.patch=8"
    " --set subsets.count=3 --set subsets.height=32 --set subsets.width=48"
    " --set flow.block_size=8 --set flow.search_radius=8"
    " --set detector_channels=10,8,8,4,1 --set scorer_channels=3,4,8 --set scorer_pools=2,2"
    " --set train.batch_size=4 --set train.epochs=3 --set train.pretrain_epochs=3";

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult run(const std::string& args, const fs::path& err_file) {
  const std::string cmd = kCli + " " + args + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_file);
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

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// FNV-1a over the file bytes.
std::uint64_t file_hash(const fs::path& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : slurp(p)) h = (h ^ c) * 1099511628211ull;
  return h;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    const CliResult r = run("synth -o " + corpus().string() + " --count 8 --width 64 --height 48 --frames 12 --seed 1",
                      *dir_ / "synth.err");
    ASSERT_EQ(r.code, 0) << r.err;
    const CliResult t = run("train --manifest " + manifest().string() + " -o " + model().string() + " --seed 2" + kSmall,
                      *dir_ / "train.err");
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path corpus() { return *dir_ / "corpus"; }
  static fs::path manifest() { return corpus() / "manifest.json"; }
  static fs::path model() { return *dir_ / "model.ckpt"; }
  static fs::path clip(int i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip%03d", i);
    return corpus() / name;
  }

  CliResult cli(const std::string& args) { return run(args, local_ / "stderr.txt"); }

  TempDir local_;
  static TempDir* dir_;
};

TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, NoSubcommandOrBadFlagIsUsageError) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("score --no-such-flag").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("--help > /dev/null").code, 0);
}

TEST_F(Cli, ScoreOneVideoGivesOneRow) {
  const fs::path out = local_ / "scores.csv";
  const CliResult r = cli("score " + clip(0).string() + " --model " + model().string() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "video_id,q_a,q_b,q_pred,errors");
  EXPECT_TRUE(rows[1].starts_with("clip000,"));
  EXPECT_TRUE(rows[1].ends_with(","));
}

TEST_F(Cli, ScoreBatchWithUnreadableVideoIsPartialFailure) {
  fs::copy(clip(0), local_ / "clip000_copy", fs::copy_options::recursive);
  std::string args = "score";
  for (int i = 0; i < 8; ++i) args += " " + clip(i).string();
  args += " " + (local_ / "clip000_copy").string() + " " + (local_ / "missing.y4m").string();
  const fs::path out = local_ / "scores.csv";
  const CliResult r = cli(args + " --model " + model().string() + " -o " + out.string());
  EXPECT_EQ(r.code, 1);
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 11u);
  int errors = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!rows[i].ends_with(",")) ++errors;
  }
  EXPECT_EQ(errors, 1);
  EXPECT_TRUE(rows.back().starts_with("missing,,,,IoError"));
}

TEST_F(Cli, MissingCheckpointIsUsageError) {
  const CliResult r = cli("score " + clip(0).string() + " --model " + (local_ / "none.ckpt").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("CheckpointNotFound"), std::string::npos);
}

TEST_F(Cli, UnknownSetKeyIsUsageError) {
  const auto base = "train --manifest " + manifest().string() + " -o " + (local_ / "m.ckpt").string();
  const CliResult r = cli(base + " --set flow.bogus=3");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("flow.bogus"), std::string::npos);
  EXPECT_EQ(cli(base + " --set train.nope=1").code, 2);
  EXPECT_EQ(cli(base + " --set flow.block_size=eight").code, 2);
  EXPECT_EQ(cli(base + " --set flow.block_size=2").code, 2);  // fails model validation
  EXPECT_EQ(cli(base + " --set missing_equals").code, 2);
  EXPECT_FALSE(fs::exists(local_ / "m.ckpt"));
}

TEST_F(Cli, ScoreIsDeterministicAcrossRunsAndJobs) {
  const auto base = "score --manifest " + manifest().string() + " --model " + model().string();
  const auto args = base + " --seed 5";
  ASSERT_EQ(cli(args + " -o " + (local_ / "a.csv").string()).code, 0);
  ASSERT_EQ(cli(args + " -o " + (local_ / "b.csv").string()).code, 0);
  ASSERT_EQ(cli(args + " --jobs 3 -o " + (local_ / "c.csv").string()).code, 0);
  EXPECT_EQ(file_hash(local_ / "a.csv"), file_hash(local_ / "b.csv"));
  EXPECT_EQ(slurp(local_ / "a.csv"), slurp(local_ / "c.csv"));
  ASSERT_EQ(cli(base + " --seed 6 -o " + (local_ / "d.csv").string()).code, 0);
  EXPECT_NE(slurp(local_ / "a.csv"), slurp(local_ / "d.csv"));
}

TEST_F(Cli, TrainIsDeterministicAndWritesLog) {
  const auto args = "train --manifest " + manifest().string() + " --stage both --seed 4" + kSmall;
  ASSERT_EQ(cli(args + " -o " + (local_ / "a.ckpt").string()).code, 0);
  const CliResult r = cli(args + " -o " + (local_ / "b.ckpt").string() + " --jobs 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(file_hash(local_ / "a.ckpt"), file_hash(local_ / "b.ckpt"));
  EXPECT_EQ(slurp(local_ / "a.ckpt"), slurp(local_ / "b.ckpt"));
  const auto log = lines(slurp(local_ / "a.ckpt.log.csv"));
  ASSERT_EQ(log.size(), 7u);
  EXPECT_EQ(log[0], "stage,epoch,mean_loss,batches,skipped_batches,running_srcc");
  EXPECT_TRUE(log[1].starts_with("stream_b_pretrain_on_ts,0,"));
  EXPECT_TRUE(log[6].starts_with("full_on_oa,2,"));
}

TEST_F(Cli, StreamBStageRequiresTsMos) {
  auto j = nlohmann::json::parse(slurp(manifest()));
  for (auto& e : j) {
    e.erase("ts_mos");
    e["video_path"] = (corpus() / e["video_path"].get<std::string>()).string();
  }
  std::ofstream(local_ / "no_ts.json") << j.dump();
  const auto base = "train --manifest " + (local_ / "no_ts.json").string() + " -o " + (local_ / "m.ckpt").string() + kSmall;
  const CliResult r = cli(base + " --stage stream_b");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ts_mos"), std::string::npos);
  EXPECT_EQ(cli(base + " --stage full").code, 0);
}

TEST_F(Cli, PrecomputeMotionIsDeterministicAndGuardsOverwrite) {
  const auto args = "precompute-motion --manifest " + manifest().string() + " --model " + model().string() + " --seed 7";
  ASSERT_EQ(cli(args + " --cache-dir " + (local_ / "c1").string()).code, 0);
  ASSERT_EQ(cli(args + " --cache-dir " + (local_ / "c2").string() + " --jobs 3").code, 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(local_ / "c1")) {
    ++files;
    EXPECT_EQ(file_hash(entry.path()), file_hash(local_ / "c2" / entry.path().filename())) << entry.path();
  }
  EXPECT_EQ(files, 8u);

  const CliResult refused = cli(args + " --cache-dir " + (local_ / "c1").string());
  EXPECT_EQ(refused.code, 2);
  EXPECT_NE(refused.err.find("--force"), std::string::npos);
  EXPECT_EQ(cli(args + " --cache-dir " + (local_ / "c1").string() + " --force").code, 0);
  EXPECT_EQ(cli("precompute-motion " + clip(0).string()).code, 2);  // no cache dir anywhere
}

TEST_F(Cli, CachedScoringMatchesAndIsFaster) {
  // Motion search dominates with a wide radius, which makes the saving visible.
  TempDir work;
  const std::string big =
      " --set sampler.clips=2 --set sampler.frames_per_clip=2 --set sampler.grid=2 --set sampler.patch=8"
      " --set subsets.count=10 --set subsets.height=96 --set subsets.width=128"
      " --set flow.block_size=8 --set flow.search_radius=24"
      " --set detector_channels=10,8,8,4,1 --set scorer_channels=3,4,8 --set scorer_pools=2,2"
      " --set train.epochs=0";
  ASSERT_EQ(cli("synth -o " + (work / "corpus").string() + " --count 4 --width 160 --height 112 --frames 20").code, 0);
  const auto m = (work / "corpus" / "manifest.json").string();
  ASSERT_EQ(cli("train --manifest " + m + " -o " + (work / "m.ckpt").string() + big).code, 0);
  const auto score = "score --manifest " + m + " --model " + (work / "m.ckpt").string() + " --seed 3";

  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(cli(score + " -o " + (work / "fresh.csv").string()).code, 0);
  const auto t1 = std::chrono::steady_clock::now();
  ASSERT_EQ(cli("precompute-motion --manifest " + m + " --model " + (work / "m.ckpt").string() +
                " --seed 3 --cache-dir " + (work / "cache").string())
                .code,
            0);
  const auto t2 = std::chrono::steady_clock::now();
  setenv("REVQ_CACHE_DIR", (work / "cache").string().c_str(), 1);
  const CliResult cached_run = cli(score + " -o " + (work / "cached.csv").string());
  unsetenv("REVQ_CACHE_DIR");
  const auto t3 = std::chrono::steady_clock::now();
  ASSERT_EQ(cached_run.code, 0) << cached_run.err;
  EXPECT_EQ(slurp(work / "fresh.csv"), slurp(work / "cached.csv"));
  const double fresh = std::chrono::duration<double>(t1 - t0).count();
  const double cached = std::chrono::duration<double>(t3 - t2).count();
  RecordProperty("fresh_seconds", std::to_string(fresh));
  RecordProperty("cached_seconds", std::to_string(cached));
  EXPECT_LT(cached, fresh);
}

TEST_F(Cli, EvalReportWeightsScenesByTestCount) {
  const fs::path out = local_ / "report.json";
  const CliResult r = cli("eval --manifest " + manifest().string() + " --model " + model().string() + " -o " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(out));
  double weighted = 0, total = 0;
  for (const auto& s : j["scenes"]) {
    weighted += s["videos"].get<double>() * s["srcc"].get<double>();
    total += s["videos"].get<double>();
  }
  EXPECT_NEAR(j["weighted"]["srcc"].get<double>(), weighted / total, 1e-12);
  EXPECT_EQ(j["residuals"].size(), 8u);

  const fs::path splits = local_ / "splits.json";
  ASSERT_EQ(cli("splits --manifest " + manifest().string() + " --repetitions 3 --test-fraction 0.5 -o " +
                splits.string())
                .code,
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(splits)).size(), 3u);
  EXPECT_EQ(cli("eval --manifest " + manifest().string() + " --model " + model().string() + " --split " +
                splits.string() + " --repetition 2 -o " + (local_ / "r2.json").string())
                .code,
            0);
  EXPECT_EQ(cli("eval --manifest " + manifest().string() + " --model " + model().string() + " --split " +
                splits.string() + " --repetition 3")
                .code,
            2);
}

TEST_F(Cli, CleanNamesBadAnnotatorAndReportsParseLine) {
  std::ofstream ratings(local_ / "ratings.csv");
  ratings << "annotator_id,video_id,oa,ts,session,timestamp\n";
  const double truth[] = {1.5, 2.0, 3.0, 3.5, 4.5, 5.0};
  for (const std::string who : {"a", "b", "c", "bad"}) {
    for (int v = 0; v < 6; ++v) {
      const double score = who == "bad" ? truth[5 - v] : truth[v];
      ratings << who << ",v" << v << ',' << score << ',' << score << ",s720p,0\n";
    }
  }
  ratings.close();
  const CliResult r = cli("clean --ratings " + (local_ / "ratings.csv").string() + " --mos-out " +
                    (local_ / "mos.csv").string() + " --report-out " + (local_ / "report.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(local_ / "report.json"));
  ASSERT_EQ(report["rejected_annotators"].size(), 1u);
  EXPECT_EQ(report["rejected_annotators"][0]["annotator_id"], "bad");
  EXPECT_EQ(report["rejected_annotators"][0]["rule"], "correlation");
  const auto mos = lines(slurp(local_ / "mos.csv"));
  ASSERT_EQ(mos.size(), 7u);
  EXPECT_EQ(mos[0], "video_id,oa_mos,ts_mos,n");
  EXPECT_EQ(mos[1], "v0,1.5,1.5,3");

  std::ofstream(local_ / "broken.csv") << "annotator_id,video_id,oa,ts,session,timestamp\na,v0,3,3,s720p,0\na,v1,x,3,s720p,0\n";
  const CliResult bad = cli("clean --ratings " + (local_ / "broken.csv").string() + " --mos-out " +
                      (local_ / "m2.csv").string() + " --report-out " + (local_ / "r2.json").string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos) << bad.err;
}

TEST_F(Cli, AttributesOfConstantVideo) {
  revq::Video v = revq::synth::solid_video(16, 12, 4, 0.5, 0.5, 0.5);
  revq::io::write_image_sequence(v, local_ / "flat");
  const fs::path out = local_ / "attrs.csv";
  ASSERT_EQ(cli("attributes " + (local_ / "flat").string() + " -o " + out.string()).code, 0);
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "video_id,contrast,colorfulness,temporal_information,brightness,errors");
  EXPECT_TRUE(rows[1].starts_with("flat,0,0,0,0.5")) << rows[1];
}

TEST_F(Cli, ProfileStripDimensions) {
  const fs::path out = local_ / "strip.png";
  ASSERT_EQ(cli("profile " + clip(1).string() + " --column 10 -o " + out.string()).code, 0);
  const revq::Frame strip = revq::io::read_png(out);
  EXPECT_EQ(strip.width(), 12);
  EXPECT_EQ(strip.height(), 48);
  EXPECT_EQ(cli("profile " + clip(1).string() + " --column 64 -o " + out.string()).code, 2);
}

TEST_F(Cli, ServeAnswersHealth) {
  const int port = 18000 + static_cast<int>(getpid() % 2000);
  std::ofstream(local_ / "study.json") << R"({"annotators": ["a"], "videos": {"s720p": ["v0", "v1"]}})";
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    const std::string config = (local_ / "study.json").string();
    const std::string log = (local_ / "log.ndjson").string();
    const std::string port_s = std::to_string(port);
    execl(kCli.c_str(), kCli.c_str(), "serve", "--config", config.c_str(), "--log", log.c_str(), "--port",
          port_s.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int attempt = 0; attempt < 100 && !res; ++attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = client.Get("/health");
  }
  kill(pid, SIGTERM);
  waitpid(pid, nullptr, 0);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
}
