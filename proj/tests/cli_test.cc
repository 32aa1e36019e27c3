// Black-box tests of the kinres binary.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "kinres/core/clip_io.h"
#include "kinres/nn/params.h"
#include "kinres/rewards/rewards.h"
#include "test_util.h"

namespace kinres {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string output;
};

// Runs the CLI through the shell with stderr folded into the output.
CliResult Cli(const std::string& args, const fs::path& cwd = {}, const std::string& env = {}) {
  std::string cmd;
  if (!cwd.empty()) cmd += "cd '" + cwd.string() + "' && ";
  cmd += "env " + env + " '" + std::string(KINRES_CLI) + "' " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int CountLines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = testing::TempDir("cli");
    std::ofstream(root_ / "small.json")
        << R"({"policy": {"hidden": [16], "log_std": -2.3},
               "ppo": {"samples_per_iter": 128, "minibatch": 64, "epochs": 2},
               "finetune": {"samples_per_iter": 128, "minibatch": 64, "epochs": 2},
               "regressor": {"hidden": 8, "decoder_hidden": [16], "steps": 15, "batch": 2}})";
    const CliResult r = Cli("gen-data --out " + (root_ / "data").string() +
                      " --count 2 --duration 1 --action sit --action other --seed 4");
    ASSERT_EQ(r.code, 0) << r.output;
  }

  static std::string Config() { return "--config " + (root_ / "small.json").string(); }
  static std::string Manifest() { return (root_ / "data" / "manifest.json").string(); }
  static fs::path Dir(const std::string& name) { return root_ / name; }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, GenDataWritesManifestAndHeads) {
  EXPECT_TRUE(fs::exists(Manifest()));
  EXPECT_TRUE(fs::exists(Dir("data") / "heads" / "sit_000.csv"));
  EXPECT_TRUE(fs::exists(Dir("data") / "heads" / "other_001.csv"));
}

TEST_F(CliTest, HelpAndUsageExitCodes) {
  EXPECT_EQ(Cli("--help").code, 0);
  EXPECT_EQ(Cli("").code, 1);
  EXPECT_EQ(Cli("train-policy --toy --no-such-flag").code, 1);
  EXPECT_EQ(Cli("frobnicate").code, 1);
}

TEST_F(CliTest, TrainRegressorIsDeterministic) {
  const CliResult a = Cli("train-regressor " + Config() + " --manifest " + Manifest() + " --out " +
                    Dir("reg_a").string());
  ASSERT_EQ(a.code, 0) << a.output;
  const CliResult b = Cli("train-regressor " + Config() + " --manifest " + Manifest() + " --out " +
                    Dir("reg_b").string());
  ASSERT_EQ(b.code, 0) << b.output;
  EXPECT_TRUE(fs::exists(Dir("reg_a") / "regressor.ckpt"));
  const std::string la = ReadFile(Dir("reg_a") / "regressor_loss.csv");
  EXPECT_EQ(la, ReadFile(Dir("reg_b") / "regressor_loss.csv"));
  EXPECT_EQ(CountLines(la), 16);
}

TEST_F(CliTest, MissingInputNamesThePath) {
  const CliResult r = Cli("train-regressor " + Config() + " --manifest /no/such/manifest.json --out " +
                    Dir("reg_x").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("/no/such/manifest.json"), std::string::npos) << r.output;
}

TEST_F(CliTest, ToyTrainingWritesOneRowPerIterationAndResumes) {
  const CliResult a = Cli("train-policy " + Config() + " --toy --iterations 5 --out " +
                    Dir("toy").string());
  ASSERT_EQ(a.code, 0) << a.output;
  const std::string csv = ReadFile(Dir("toy") / "training.csv");
  EXPECT_EQ(CountLines(csv), 6);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "iteration,mean_reward,mean_episode_length,kl,clip_fraction");

  const CliResult b = Cli("train-policy " + Config() + " --toy --iterations 2 --resume " +
                    (Dir("toy") / "policy.ckpt").string() + " --out " + Dir("toy2").string());
  ASSERT_EQ(b.code, 0) << b.output;
  std::istringstream rows(ReadFile(Dir("toy2") / "training.csv"));
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  EXPECT_EQ(line.substr(0, 2), "5,");
  std::getline(rows, line);
  EXPECT_EQ(line.substr(0, 2), "6,");
  const nn::Checkpoint ck = nn::LoadCheckpoint(Dir("toy2") / "policy.ckpt");
  EXPECT_EQ(ck.meta.at("iteration"), "7");
}

TEST_F(CliTest, ConfigPrecedenceAndValidation) {
  std::ofstream(Dir("bad.json")) << R"({"ppo": {"learning_rate": 0.1}})";
  CliResult r = Cli("train-policy --toy --iterations 1 --config " + Dir("bad.json").string() +
              " --out " + Dir("bad").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("ppo.learning_rate"), std::string::npos) << r.output;

  r = Cli("train-policy --toy --iterations 1 --out x", {}, "KINRES_PPO__NOPE=1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("KINRES_PPO__NOPE"), std::string::npos) << r.output;

  // The environment overrides the file, and flags override both.
  const fs::path env_out = Dir("from_env");
  r = Cli("train-policy " + Config() + " --toy", {},
          "KINRES_OUT=" + env_out.string() + " KINRES_PPO__ITERATIONS=2");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(CountLines(ReadFile(env_out / "training.csv")), 3);
  const fs::path flag_out = Dir("from_flag");
  r = Cli("train-policy " + Config() + " --toy --iterations 1 --out " + flag_out.string(), {},
          "KINRES_OUT=" + Dir("not_here").string() + " KINRES_PPO__ITERATIONS=4");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(CountLines(ReadFile(flag_out / "training.csv")), 2);
  EXPECT_FALSE(fs::exists(Dir("not_here")));
}

TEST_F(CliTest, WritesOnlyUnderOut) {
  const fs::path cwd = testing::TempDir("cli_cwd");
  const CliResult r = Cli("train-policy --toy --iterations 1 " + Config() + " --out o", cwd);
  ASSERT_EQ(r.code, 0) << r.output;
  int entries = 0;
  for (const auto& e : fs::directory_iterator(cwd)) {
    ++entries;
    EXPECT_EQ(e.path().filename(), "o");
  }
  EXPECT_EQ(entries, 1);
}

TEST_F(CliTest, RolloutFinetuneAndEval) {
  ASSERT_EQ(Cli("train-policy " + Config() + " --manifest " + Manifest() +
                " --action other --iterations 1 --out " + Dir("pol").string())
                .code,
            0);
  const std::string policy = (Dir("pol") / "policy.ckpt").string();
  const std::string track = " --manifest " + Manifest() + " --clip other_001";

  // Deterministic rollouts export identical files that load back.
  for (const char* name : {"roll_a", "roll_b"}) {
    const CliResult r = Cli("rollout " + Config() + " --policy " + policy + track + " --out " +
                      Dir(name).string());
    ASSERT_EQ(r.code, 0) << r.output;
  }
  for (const char* f : {"rollout.jsonl", "reference.jsonl", "breakdown.csv", "joints.csv"}) {
    EXPECT_EQ(ReadFile(Dir("roll_a") / f), ReadFile(Dir("roll_b") / f)) << f;
  }
  const MotionClip gen = LoadClip(Dir("roll_a") / "rollout.jsonl");
  gen.Validate();
  const MotionClip ref = LoadClip(Dir("roll_a") / "reference.jsonl");
  EXPECT_EQ(gen.num_frames(), ref.num_frames());
  EXPECT_EQ(CountLines(ReadFile(Dir("roll_a") / "joints.csv")), gen.num_frames() + 1);

  // Breakdown rows recompute to their totals.
  const ImitationWeights w = RewardWeights{}.Normalized().imitation;
  std::istringstream rows(ReadFile(Dir("roll_a") / "breakdown.csv"));
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "step,total,pose,end_effector,root_vel,root_rot,root_pos");
  int n = 0;
  while (std::getline(rows, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(cells, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 7u);
    const double sum =
        w.pose * v[2] + w.end_effector * v[3] + w.root_vel * v[4] + w.root_rot * v[5] +
        w.root_pos * v[6];
    EXPECT_NEAR(v[1], sum, 1e-12);
    ++n;
  }
  EXPECT_EQ(n + 1, gen.num_frames());

  // Fine-tuning: zero iterations keep the parameters; a missing file fails.
  const std::string heads = (Dir("data") / "heads" / "other_001.csv").string();
  CliResult r = Cli("finetune " + Config() + " --policy " + policy + " --heads " + heads + track +
              " --iterations 0 --out " + Dir("ft0").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const nn::Checkpoint before = nn::LoadCheckpoint(policy);
  const nn::Checkpoint after = nn::LoadCheckpoint(Dir("ft0") / "finetuned.ckpt");
  int compared = 0;
  for (const nn::Tensor& t : after.params.tensors) {
    ASSERT_GE(before.params.Find(t.name), 0) << t.name;
    EXPECT_EQ(t.value, before.params.Get(t.name)) << t.name;
    ++compared;
  }
  EXPECT_GT(compared, 0);
  r = Cli("finetune " + Config() + " --policy " + policy + " --heads /no/heads.csv" + track +
          " --out " + Dir("ftx").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("/no/heads.csv"), std::string::npos) << r.output;
  r = Cli("finetune " + Config() + " --policy " + policy + " --heads " + heads + track +
          " --iterations 1 --out " + Dir("ft1").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(CountLines(ReadFile(Dir("ft1") / "finetune.csv")), 2);

  // Eval: a clip against itself is an all-zero row; length mismatch fails.
  const std::string clip = (Dir("roll_a") / "reference.jsonl").string();
  r = Cli("eval --gen " + clip + " --ref " + clip + " --out " + Dir("ev").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string metrics = ReadFile(Dir("ev") / "metrics.csv");
  EXPECT_NE(metrics.find("\nother,0,0,0,"), std::string::npos) << metrics;
  MotionClip shorter = ref;
  shorter.frames.pop_back();
  const std::string short_clip = (Dir("short.jsonl")).string();
  SaveClip(shorter, short_clip);
  r = Cli("eval --gen " + short_clip + " --ref " + clip + " --out " + Dir("ev2").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find(short_clip), std::string::npos) << r.output;
  EXPECT_NE(r.output.find(clip), std::string::npos) << r.output;
}

}  // namespace
}  // namespace kinres
