#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kinres/core/error.h"
#include "kinres/sim/kinematics.h"
#include "kinres/sim/model.h"
#include "kinres/sim/scene.h"
#include "kinres/sim/simulator.h"

namespace kinres::sim {
namespace {

Pose Standing(const HumanoidModel& m) {
  Pose p;
  p.joint_angles = VecX::Zero(m.dof());
  p.root_pos.z() = GroundedRootHeight(m, p);
  return p;
}

TEST(Model, MiniHumanoidShape) {
  const HumanoidModel m = MiniHumanoid();
  EXPECT_EQ(m.num_links(), 10);
  EXPECT_EQ(m.dof(), 16);
  EXPECT_NEAR(m.TotalMass(), 50.0, 1e-9);
  EXPECT_EQ(m.end_effectors.size(), 5u);
  EXPECT_EQ(KeypointPositions(m, Standing(m)).size(), 15u);
  EXPECT_EQ(m.DofNames().size(), 16u);
}

TEST(Model, ValidationRejectsBadTrees) {
  HumanoidModel m = MiniHumanoid();
  m.links[3].parent = 5;  // forward reference makes a cycle-capable tree
  EXPECT_THROW(m.Validate(), ValidationError);
  m = MiniHumanoid();
  m.links[2].hinges[0].kp = 0.0;
  EXPECT_THROW(m.Validate(), ValidationError);
  m = MiniHumanoid();
  m.links[4].mass = -1.0;
  EXPECT_THROW(m.Validate(), ValidationError);
}

TEST(Model, JsonRoundTrip) {
  const HumanoidModel m = MiniHumanoid();
  const HumanoidModel r = ModelFromJson(ModelToJson(m));
  EXPECT_EQ(ModelToJson(r), ModelToJson(m));
  EXPECT_EQ(r.Kp(), m.Kp());
  EXPECT_EQ(r.LowerLimits(), m.LowerLimits());
}

TEST(Scene, JsonRoundTripAndChairHeight) {
  Scene s;
  s.objects.push_back(MakeChair("chair", Transform::Translation(Vec3(1, 0, 0))));
  s.objects.push_back(MakeBoxObject("box", Transform::Translation(Vec3(3, 0, 0.3))));
  EXPECT_EQ(SceneToJson(SceneFromJson(SceneToJson(s))), SceneToJson(s));
  double top = 0.0;
  for (const BoxPart& p : s.objects[0].parts) {
    if (p.local.translation.z() + p.half_extents.z() < 0.5) {
      top = std::max(top, p.local.translation.z() + p.half_extents.z());
    }
  }
  EXPECT_NEAR(top, 0.42, 1e-12);
}

TEST(PdTorque, MatchesFormula) {
  const HumanoidModel m = MiniHumanoid();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const VecX kp = m.Kp();
  const VecX kd = m.Kd();
  for (int trial = 0; trial < 100; ++trial) {
    VecX target(m.dof()), q(m.dof()), qd(m.dof());
    for (int i = 0; i < m.dof(); ++i) {
      target[i] = u(rng);
      q[i] = u(rng);
      qd[i] = 3.0 * u(rng);
    }
    const VecX tau = PdTorque(m, target, q, qd);
    for (int i = 0; i < m.dof(); ++i) {
      EXPECT_NEAR(tau[i], kp[i] * (target[i] - q[i]) - kd[i] * qd[i], 1e-12);
    }
  }
}

TEST(PdTorque, LimitsClampAndShapesChecked) {
  const HumanoidModel m = Pendulum();
  const VecX tau = PdTorque(m, VecX::Constant(1, 10.0), VecX::Zero(1), VecX::Zero(1),
                            VecX::Constant(1, 5.0));
  EXPECT_EQ(tau[0], 5.0);
  EXPECT_THROW(PdTorque(m, VecX::Zero(2), VecX::Zero(1), VecX::Zero(1)), ValidationError);
}

TEST(SimConfig, SubstepsMustDivide) {
  SimConfig c;
  EXPECT_EQ(c.Substeps(), 15);
  c.sim_dt = 1.0 / 400.0;
  EXPECT_THROW(c.Validate(), ValidationError);
}

// Pendulum far away from a dynamic box: the box sees only gravity and the
// ground.
Simulator BoxWorld(const Transform& pose, double friction) {
  Scene scene;
  scene.objects.push_back(
      MakeBoxObject("box", pose, Vec3(0.2, 0.2, 0.2), 5.0, friction));
  return Simulator(Pendulum(), scene);
}

TEST(Physics, FreeFallMatchesClosedForm) {
  Simulator sim = BoxWorld(Transform::Translation(Vec3(5, 0, 3.0)), 0.5);
  const HumanoidModel& m = sim.model();
  Pose p;
  p.joint_angles = VecX::Zero(m.dof());
  SimState s = sim.MakeState(p, Velocity::Zero(m.dof()));
  s.objects[0].lin_vel = Vec3(0.4, 0.0, 1.0);
  double worst = 0.0;
  for (int k = 1; k <= 15; ++k) {  // 0.5 s
    s = sim.StepPassive(s);
    const double t = k / 30.0;
    const Vec3 exact(5.0 + 0.4 * t, 0.0, 3.0 + t - 0.5 * 9.81 * t * t);
    worst = std::max(worst, (s.objects[0].pose.translation - exact).norm());
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Physics, FrictionDecelerationIsMuG) {
  const double mu = 0.5;
  Simulator sim = BoxWorld(Transform::Translation(Vec3(5, 0, 0.2)), mu);
  const HumanoidModel& m = sim.model();
  Pose p;
  p.joint_angles = VecX::Zero(m.dof());
  SimState s = sim.MakeState(p, Velocity::Zero(m.dof()));
  for (int k = 0; k < 30; ++k) s = sim.StepPassive(s);  // settle
  s.objects[0].lin_vel = Vec3(2.0, 0.0, 0.0);
  for (int k = 0; k < 2; ++k) s = sim.StepPassive(s);
  const double v0 = s.objects[0].lin_vel.x();
  for (int k = 0; k < 6; ++k) s = sim.StepPassive(s);  // 0.2 s, still sliding
  const double v1 = s.objects[0].lin_vel.x();
  ASSERT_GT(v1, 0.1);
  const double decel = (v0 - v1) / 0.2;
  EXPECT_NEAR(decel, mu * 9.81, 0.05 * mu * 9.81);
}

TEST(Physics, StaticObjectsNeverMove) {
  Scene scene;
  scene.objects.push_back(MakeChair("chair", Transform::Translation(Vec3(0.35, 0, 0))));
  const HumanoidModel m = MiniHumanoid();
  Simulator sim(m, scene);
  SimState s = sim.MakeState(Standing(m), Velocity::Zero(m.dof()));
  const Transform before = s.objects[0].pose;
  VecX target = VecX::Zero(m.dof());
  for (int k = 0; k < 30; ++k) s = sim.Step(s, target);
  EXPECT_EQ(s.objects[0].pose.translation, before.translation);
  EXPECT_EQ(s.objects[0].pose.rotation, before.rotation);
}

TEST(Physics, StandingPoseHoldsUnderPd) {
  const HumanoidModel m = MiniHumanoid();
  Simulator sim(m, Scene{});
  SimState s = sim.MakeState(Standing(m), Velocity::Zero(m.dof()));
  const VecX target = VecX::Zero(m.dof());
  for (int k = 0; k < 60; ++k) {
    s = sim.Step(s, target);
    ASSERT_EQ(sim.CheckTermination(s), Termination::kAlive);
  }
  EXPECT_LT(QuatDiffAngle(s.pose.root_rot, UnitQuaternion()), 0.02);
  EXPECT_LT(s.pose.joint_angles.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_NEAR(s.time, 2.0, 1e-9);
}

TEST(Physics, PassiveHumanoidFalls) {
  const HumanoidModel m = MiniHumanoid();
  Simulator sim(m, Scene{});
  SimState s = sim.MakeState(Standing(m), Velocity::Zero(m.dof()));
  s.vel.root_ang = Vec3(0, 1.0, 0);
  bool fell = false;
  for (int k = 0; k < 90 && !fell; ++k) {
    s = sim.StepPassive(s);
    fell = sim.CheckTermination(s) == Termination::kFallen;
  }
  EXPECT_TRUE(fell);
}

TEST(Physics, NonFiniteTargetDiverges) {
  const HumanoidModel m = Pendulum();
  Simulator sim(m, Scene{});
  Pose p;
  p.joint_angles = VecX::Zero(1);
  const SimState s = sim.MakeState(p, Velocity::Zero(1));
  EXPECT_THROW(sim.Step(s, VecX::Constant(1, std::nan(""))), DivergenceError);
}

TEST(Physics, PendulumSwingConservesEnergyApproximately) {
  // Unactuated pendulum released at 0.5 rad: the midpoint rule keeps the
  // amplitude within a few percent over two seconds.
  const HumanoidModel m = Pendulum(1.0, 0.5, 1e-6, 0.0);
  Simulator sim(m, Scene{});
  Pose p;
  p.joint_angles = VecX::Constant(1, 0.5);
  SimState s = sim.MakeState(p, Velocity::Zero(1));
  double peak = 0.0;
  for (int k = 0; k < 60; ++k) {
    s = sim.StepPassive(s);
    if (k >= 30) peak = std::max(peak, std::abs(s.pose.joint_angles[0]));
  }
  EXPECT_NEAR(peak, 0.5, 0.03);
}

TEST(Kinematics, EndEffectorsFollowRootTransform) {
  const HumanoidModel m = MiniHumanoid();
  Pose p = Standing(m);
  const auto base = EndEffectorPositions(m, p);
  p.root_rot = UnitQuaternion::Yaw(0.7);
  p.root_pos += Vec3(1.0, -2.0, 0.0);
  const auto moved = EndEffectorPositions(m, p);
  for (size_t i = 0; i < base.size(); ++i) {
    const Vec3 expect = UnitQuaternion::Yaw(0.7).Rotate(base[i] - Vec3(0, 0, 0)) +
                        Vec3(1.0, -2.0, 0.0);
    EXPECT_LT((moved[i] - expect).norm(), 1e-12);
  }
}

TEST(Kinematics, GroundedHeightTouchesFloor) {
  const HumanoidModel m = MiniHumanoid();
  Pose p = Standing(m);
  double lowest = 1e9;
  const auto links = LinkTransforms(m, p);
  for (int b = 0; b < m.num_links(); ++b) {
    if (!m.IsFoot(b)) continue;
    for (const auto& s : GeomSpheres(m.links[b].geom, links[b], false)) {
      lowest = std::min(lowest, s.center.z() - s.radius);
    }
  }
  EXPECT_NEAR(lowest, 0.0, 1e-12);
}

}  // namespace
}  // namespace kinres::sim
