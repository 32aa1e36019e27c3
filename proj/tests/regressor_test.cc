#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kinres/core/error.h"
#include "kinres/datagen/datagen.h"
#include "kinres/regressor/features.h"
#include "kinres/regressor/regressor.h"
#include "kinres/sim/model.h"
#include "test_util.h"

namespace kinres {
namespace {

using testing::CheckParamGradients;
using testing::RandomQuat;
using testing::RandomVec;
using testing::RandomVecX;

RegressorConfig TinyConfig() {
  RegressorConfig c;
  c.feature_dim = 5;
  c.dof = 2;
  c.hidden = 6;
  c.decoder_hidden = {8};
  return c;
}

TEST(KinematicState, RawRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    KinematicState s;
    s.root_xy = Eigen::Vector2d(0.3 * i, -0.1);
    s.root_rot = RandomQuat(rng);
    s.joint_angles = RandomVecX(4, rng);
    s.root_lin = RandomVec(rng);
    s.root_ang = RandomVec(rng);
    s.joint_vel = RandomVecX(4, rng);
    const VecX raw = s.ToRaw();
    EXPECT_GE(raw[2], 0.0);
    const KinematicState r = KinematicState::FromRaw(raw, 4);
    EXPECT_EQ(r.joint_angles, s.joint_angles);
    EXPECT_NEAR(QuatDiffAngle(r.root_rot, s.root_rot), 0.0, 1e-7);
    EXPECT_LT((r.ToRaw() - raw).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(KinematicState::FromRaw(VecX::Zero(5), 4), ValidationError);
  const KinematicState z = KinematicState::FromRaw(VecX::Zero(KinematicState::RawDim(1)), 1);
  EXPECT_EQ(z.root_rot, UnitQuaternion());
}

TEST(KinematicState, DecodeGroundsTheFeet) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  KinematicState s;
  s.root_xy = Eigen::Vector2d(1.0, 2.0);
  s.root_rot = UnitQuaternion::Yaw(0.4);
  s.joint_angles = VecX::Zero(m.dof());
  s.joint_vel = VecX::Zero(m.dof());
  const auto [pose, vel] = s.Decode(m);
  EXPECT_EQ(pose.root_pos.x(), 1.0);
  EXPECT_NEAR(pose.root_pos.z(), sim::GroundedRootHeight(m, pose), 1e-15);
}

TEST(Regressor, GradientMatchesFiniteDifferences) {
  const RegressorConfig c = TinyConfig();
  const Regressor reg = Regressor::Create(c, 3);
  ASSERT_LE(reg.params().NumScalars(), 1000);
  std::mt19937_64 rng(4);
  FeatureSequence f;
  f.values = nn::Mat(c.feature_dim, 6);
  for (int i = 0; i < f.values.size(); ++i) f.values.data()[i] = RandomVecX(1, rng)[0];
  nn::Mat targets(reg.out_dim(), 6);
  for (int i = 0; i < targets.size(); ++i) targets.data()[i] = RandomVecX(1, rng)[0];
  const auto [loss, grads] = reg.LossAndGrad(f, targets);
  EXPECT_NEAR(loss, reg.MseLoss(f, targets), 1e-12);
  Regressor probe = reg;
  const auto check = CheckParamGradients(reg.params(), grads, [&](const nn::ParamSet& p) {
    probe.params() = p;
    return probe.MseLoss(f, targets);
  });
  EXPECT_EQ(check.failures, 0) << "worst relative error " << check.worst_rel;
}

TEST(Regressor, LossIsMeanSquaredErrorPerFrame) {
  const RegressorConfig c = TinyConfig();
  const Regressor reg = Regressor::Create(c, 5);
  FeatureSequence f;
  f.values = nn::Mat::Ones(c.feature_dim, 3);
  const nn::Mat out = reg.RegressRaw(f);
  nn::Mat targets = out;
  targets(0, 1) += 0.5;
  targets(3, 2) -= 1.0;
  EXPECT_NEAR(reg.MseLoss(f, targets), (0.25 + 1.0) / 3.0, 1e-12);
}

TEST(Regressor, IsCausal) {
  const RegressorConfig c = TinyConfig();
  const Regressor reg = Regressor::Create(c, 6);
  std::mt19937_64 rng(7);
  FeatureSequence f;
  f.values = nn::Mat::Random(c.feature_dim, 8);
  const nn::Mat a = reg.RegressRaw(f);
  f.values.col(6) += RandomVecX(c.feature_dim, rng);
  const nn::Mat b = reg.RegressRaw(f);
  EXPECT_EQ(a.leftCols(6), b.leftCols(6));
  EXPECT_NE(a.col(6), b.col(6));
}

TEST(Regressor, CheckpointRoundTrip) {
  const Regressor reg = Regressor::Create(TinyConfig(), 8);
  const Regressor back = Regressor::FromCheckpoint(reg.ToCheckpoint());
  EXPECT_TRUE(back.params() == reg.params());
  EXPECT_EQ(back.config().decoder_hidden, reg.config().decoder_hidden);
  nn::Checkpoint wrong = reg.ToCheckpoint();
  wrong.kind = "policy";
  EXPECT_THROW(Regressor::FromCheckpoint(wrong), ValidationError);
}

TEST(Regressor, TrainingReducesLossAndIsDeterministic) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  std::vector<RegressorSample> data;
  for (uint64_t seed = 0; seed < 2; ++seed) {
    ScenarioSpec spec;
    spec.action = ActionLabel::kOther;
    spec.duration = 2.0;
    spec.seed = seed;
    const GeneratedClip g = GenerateClip(m, spec);
    data.push_back({SynthesizeFeatures(g.clip, 0.01, seed), RawTargets(g.clip)});
  }
  RegressorConfig c;
  c.hidden = 16;
  c.decoder_hidden = {32};
  RegressorHyper h;
  h.steps = 60;
  h.batch = 2;
  h.seed = 3;
  h.adam.lr = 3e-3;
  const auto a = TrainRegressor(data, c, h);
  const auto b = TrainRegressor(data, c, h);
  ASSERT_EQ(a.loss_trace.size(), 60u);
  EXPECT_LT(a.loss_trace.back(), 0.5 * a.loss_trace.front());
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_TRUE(a.model.params() == b.model.params());
  EXPECT_THROW(TrainRegressor({}, c, h), ValidationError);
}

TEST(Regressor, FitsALinearMap) {
  RegressorConfig c;
  c.feature_dim = 4;
  c.dof = 1;
  c.hidden = 16;
  c.decoder_hidden = {32};
  const int out = KinematicState::RawDim(c.dof);
  std::mt19937_64 rng(12);
  const nn::Mat a = nn::Mat::Random(out, c.feature_dim) * 0.5;
  std::vector<RegressorSample> data;
  for (int i = 0; i < 4; ++i) {
    FeatureSequence f;
    f.values = nn::Mat(c.feature_dim, 20);
    for (int k = 0; k < f.values.size(); ++k) f.values.data()[k] = RandomVecX(1, rng, 0.5)[0];
    data.push_back({f, a * f.values});
  }
  RegressorHyper h;
  h.steps = 2000;
  h.batch = 4;
  h.adam.lr = 3e-3;
  const auto r = TrainRegressor(data, c, h);
  EXPECT_LT(r.loss_trace.back(), 1e-3);
  // Window-10 smoothed loss ends far below where it starts.
  auto smooth = [&](size_t end) {
    double s = 0.0;
    for (size_t i = end - 10; i < end; ++i) s += r.loss_trace[i];
    return s / 10.0;
  };
  EXPECT_LT(smooth(r.loss_trace.size()), 0.01 * smooth(10));
}

TEST(Regressor, ShapeMismatchIsRejected) {
  const Regressor reg = Regressor::Create(TinyConfig(), 9);
  FeatureSequence f;
  f.values = nn::Mat::Zero(4, 3);
  EXPECT_THROW(reg.RegressRaw(f), ValidationError);
}

TEST(Features, ContextInFrameIsYawInvariant) {
  std::mt19937_64 rng(10);
  const HeadSample h = HeadSample::Make(Vec3(1, 2, 1.5), RandomQuat(rng), RandomVec(rng),
                                        RandomVec(rng));
  const VecX f = ContextFeatures(h, ActionLabel::kPush);
  EXPECT_EQ(f.size(), FeatureLayout::kDim);
  EXPECT_EQ(f[FeatureLayout::kAction + 1], 1.0);
  const UnitQuaternion frame = UnitQuaternion::Yaw(0.3);
  const Vec3 origin(0.5, 0.5, 0.0);
  const UnitQuaternion yaw = UnitQuaternion::Yaw(1.1);
  const Vec3 shift(3, -1, 0);
  const HeadSample moved =
      HeadSample::Make(yaw.Rotate(h.pos) + shift, yaw * h.rot, yaw.Rotate(h.lin_vel_world),
                       yaw.Rotate(h.ang_vel_world));
  const VecX a = ContextInFrame(f, frame, origin);
  const VecX b = ContextInFrame(ContextFeatures(moved, ActionLabel::kPush), yaw * frame,
                                yaw.Rotate(origin) + shift);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace kinres
