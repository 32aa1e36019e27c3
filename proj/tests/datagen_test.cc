#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"
#include "kinres/datagen/datagen.h"
#include "kinres/regressor/features.h"
#include "kinres/sim/kinematics.h"
#include "kinres/sim/model.h"
#include "test_util.h"

namespace kinres {
namespace {

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioSpec Spec(ActionLabel action, uint64_t seed) {
  ScenarioSpec s;
  s.action = action;
  s.seed = seed;
  return s;
}

class DatagenSeeds : public ::testing::TestWithParam<uint64_t> {
 protected:
  sim::HumanoidModel model_ = sim::MiniHumanoid();
};

TEST_P(DatagenSeeds, SitEndsSeated) {
  const GeneratedClip g = GenerateClip(model_, Spec(ActionLabel::kSit, GetParam()));
  g.clip.Validate();
  EXPECT_EQ(g.clip.num_frames(), 181);
  const double standing = g.clip.frames.front().pose.root_pos.z();
  const double last = g.clip.frames.back().pose.root_pos.z();
  EXPECT_LE(last, 0.7 * standing);
  ASSERT_EQ(g.scene.objects.size(), 1u);
  EXPECT_TRUE(g.scene.objects[0].is_static);
  for (const Frame& f : g.clip.frames) {
    EXPECT_EQ(f.objects[0].pose.translation, g.clip.frames[0].objects[0].pose.translation);
  }
}

TEST_P(DatagenSeeds, PushMovesTheBox) {
  const GeneratedClip g = GenerateClip(model_, Spec(ActionLabel::kPush, GetParam()));
  const Vec3 d = g.clip.frames.back().objects[0].pose.translation - g.clip.frames.front().objects[0].pose.translation;
  EXPECT_GT(d.norm(), 0.2);
}

TEST_P(DatagenSeeds, AvoidKeepsClearance) {
  const GeneratedClip g = GenerateClip(model_, Spec(ActionLabel::kAvoid, GetParam()));
  EXPECT_GT(MinClearance(model_, g.clip, g.scene.objects[0]), 0.0);
}

TEST_P(DatagenSeeds, VelocitiesAreFiniteDifferences) {
  for (ActionLabel a : {ActionLabel::kSit, ActionLabel::kPush, ActionLabel::kAvoid,
                        ActionLabel::kOther}) {
    const GeneratedClip g = GenerateClip(model_, Spec(a, GetParam()));
    const MotionClip fd = FiniteDifferenceVelocities(g.clip);
    double worst = 0.0;
    for (int t = 0; t < g.clip.num_frames(); ++t) {
      const Velocity& v = g.clip.frames[t].vel;
      const Velocity& w = fd.frames[t].vel;
      worst = std::max(worst, (v.root_lin - w.root_lin).cwiseAbs().maxCoeff());
      worst = std::max(worst, (v.root_ang - w.root_ang).cwiseAbs().maxCoeff());
      worst = std::max(worst, (v.joint_vel - w.joint_vel).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-9) << ActionName(a);
    for (const Frame& f : g.clip.frames) ASSERT_TRUE(f.head.has_value());
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, DatagenSeeds, ::testing::Values(0u, 1u, 7u, 42u, 1234u));

TEST(GenerateClip, Deterministic) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  for (ActionLabel a : {ActionLabel::kSit, ActionLabel::kPush}) {
    std::ostringstream x, y;
    WriteClip(GenerateClip(m, Spec(a, 9)).clip, x);
    WriteClip(GenerateClip(m, Spec(a, 9)).clip, y);
    EXPECT_EQ(x.str(), y.str());
    std::ostringstream z;
    WriteClip(GenerateClip(m, Spec(a, 10)).clip, z);
    EXPECT_NE(x.str(), z.str());
  }
}

TEST(GenerateClip, RejectsStartInsideObject) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  ScenarioSpec s = Spec(ActionLabel::kPush, 0);
  s.radius = 0.1;
  EXPECT_THROW(GenerateClip(m, s), ValidationError);
}

TEST(GenerateClip, HeadSamplesFollowHeadSite) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const GeneratedClip g = GenerateClip(m, Spec(ActionLabel::kAvoid, 3));
  for (int t = 0; t < g.clip.num_frames(); t += 17) {
    const Frame& f = g.clip.frames[t];
    const auto links = sim::LinkTransforms(m, f.pose);
    EXPECT_LT((f.head->pos - sim::SitePosition(links, m.head)).norm(), 1e-12);
  }
}

TEST(DeriveHeadTrajectory, ZeroDriftIsIdentity) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const GeneratedClip g = GenerateClip(m, Spec(ActionLabel::kSit, 2));
  const auto heads = DeriveHeadTrajectory(g.clip, DriftModel{});
  ASSERT_EQ(heads.size(), g.clip.frames.size());
  for (size_t t = 0; t < heads.size(); ++t) {
    EXPECT_EQ(heads[t].pos, g.clip.frames[t].head->pos);
    EXPECT_EQ(heads[t].rot, g.clip.frames[t].head->rot);
    EXPECT_EQ(heads[t].lin_vel_world, g.clip.frames[t].head->lin_vel_world);
  }
}

TEST(DeriveHeadTrajectory, BiasIntegratesLinearly) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const GeneratedClip g = GenerateClip(m, Spec(ActionLabel::kSit, 2));
  DriftModel d;
  d.bias_rate = Vec3(0.05, 0, 0);
  const auto heads = DeriveHeadTrajectory(g.clip, d);
  for (size_t t = 0; t < heads.size(); ++t) {
    const double time = t / g.clip.frame_rate;
    const Vec3 off = heads[t].pos - g.clip.frames[t].head->pos;
    EXPECT_NEAR(off.x(), 0.05 * time, 1e-9);
    EXPECT_NEAR(off.y(), 0.0, 1e-12);
    EXPECT_NEAR(heads[t].lin_vel_world.x() - g.clip.frames[t].head->lin_vel_world.x(), 0.05,
                1e-9);
  }
}

TEST(DeriveHeadTrajectory, StochasticDriftIsSeeded) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const GeneratedClip g = GenerateClip(m, Spec(ActionLabel::kPush, 2));
  DriftModel d;
  d.pos_noise = 0.05;
  d.rot_noise = 0.05;
  d.seed = 11;
  const auto a = DeriveHeadTrajectory(g.clip, d);
  const auto b = DeriveHeadTrajectory(g.clip, d);
  d.seed = 12;
  const auto c = DeriveHeadTrajectory(g.clip, d);
  for (size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a[t].pos, b[t].pos);
    EXPECT_EQ(a[t].rot, b[t].rot);
  }
  EXPECT_NE(a.back().pos, c.back().pos);
  MotionClip bare = g.clip;
  bare.frames[4].head.reset();
  EXPECT_THROW(DeriveHeadTrajectory(bare, d), ValidationError);
}

TEST(HeadTrajectoryFile, RoundTripIsExact) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const GeneratedClip g = GenerateClip(m, Spec(ActionLabel::kAvoid, 4));
  DriftModel d;
  d.offset = Vec3(0.3, 0.0, 0.0);
  d.rot_noise = 0.02;
  d.seed = 3;
  const auto heads = DeriveHeadTrajectory(g.clip, d);
  const auto dir = testing::TempDir("head_traj");
  SaveHeadTrajectory(heads, dir / "h.csv");
  const auto back = LoadHeadTrajectory(dir / "h.csv");
  ASSERT_EQ(back.size(), heads.size());
  for (size_t t = 0; t < heads.size(); ++t) {
    EXPECT_EQ(back[t].pos, heads[t].pos);
    EXPECT_EQ(back[t].rot, heads[t].rot);
    EXPECT_EQ(back[t].lin_vel_world, heads[t].lin_vel_world);
    EXPECT_EQ(back[t].ang_vel_world, heads[t].ang_vel_world);
    EXPECT_LT((back[t].lin_vel_local - heads[t].lin_vel_local).norm(), 1e-12);
  }
  EXPECT_THROW(LoadHeadTrajectory(dir / "missing.csv"), IoError);
  std::ofstream(dir / "bad.csv") << "frame,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz\n"
                                 << "0,0,0,1,1,0,0,0,0,0,0,0,0,0\n"
                                 << "2,0,0,1,1,0,0,0,0,0,0,0,0,0\n";
  try {
    LoadHeadTrajectory(dir / "bad.csv");
    FAIL() << "non-consecutive frames accepted";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Features, SynthesizedAndFileRoundTrip) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const GeneratedClip g = GenerateClip(m, Spec(ActionLabel::kPush, 5));
  const FeatureSequence clean = SynthesizeFeatures(g.clip, 0.0, 1);
  ASSERT_EQ(clean.values.rows(), FeatureLayout::kDim);
  ASSERT_EQ(clean.values.cols(), g.clip.num_frames());
  for (int t = 0; t < g.clip.num_frames(); t += 20) {
    EXPECT_EQ(VecX(clean.values.col(t)),
              ContextFeatures(*g.clip.frames[t].head, ActionLabel::kPush));
  }
  const FeatureSequence noisy = SynthesizeFeatures(g.clip, 0.05, 1);
  EXPECT_EQ(noisy.values, SynthesizeFeatures(g.clip, 0.05, 1).values);
  EXPECT_GT((noisy.values - clean.values).norm(), 0.0);
  const auto dir = testing::TempDir("features");
  SaveFeatures(noisy, dir / "f.txt");
  EXPECT_EQ(LoadFeatures(dir / "f.txt").values, noisy.values);
}

TEST(Dataset, PlanSplitsAndSeeds) {
  DatasetOptions o;
  o.n_per_action = 10;
  o.train_fraction = 0.8;
  const DatasetManifest man = PlanDataset(o);
  EXPECT_EQ(man.entries.size(), 30u);
  const auto train = man.Split("train");
  const auto test = man.Split("test");
  EXPECT_EQ(train.size(), 24u);
  EXPECT_EQ(test.size(), 6u);
  std::set<std::string> ids;
  std::set<uint64_t> seeds;
  for (const auto& e : man.entries) {
    ids.insert(e.clip_id);
    seeds.insert(e.spec.seed);
  }
  EXPECT_EQ(ids.size(), 30u);
  EXPECT_EQ(seeds.size(), 30u);
  for (const auto& e : test) {
    for (const auto& t : train) EXPECT_NE(e.clip_id, t.clip_id);
  }
  o.n_per_action = 1;
  EXPECT_THROW(PlanDataset(o), ValidationError);
}

TEST(Dataset, RegenerationReproducesFiles) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  DatasetOptions o;
  o.n_per_action = 2;
  o.duration = 2.0;
  o.actions = {ActionLabel::kSit, ActionLabel::kPush};
  o.seed = 5;
  const auto a = testing::TempDir("dataset_a");
  const auto b = testing::TempDir("dataset_b");
  const DatasetManifest man = GenerateDataset(m, o, a);
  const DatasetManifest loaded = LoadManifest(a / "manifest.json");
  ASSERT_EQ(loaded.entries.size(), man.entries.size());
  RegenerateDataset(m, loaded, b);
  for (const auto& e : man.entries) {
    for (const std::string& rel : {e.clip_path, e.scene_path, e.features_path}) {
      EXPECT_EQ(ReadFile(a / rel), ReadFile(b / rel)) << rel;
      EXPECT_FALSE(ReadFile(a / rel).empty()) << rel;
    }
  }
  EXPECT_THROW(LoadManifest(a / "nope.json"), IoError);
}

}  // namespace
}  // namespace kinres
