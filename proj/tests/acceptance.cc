// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <fmt/core.h>

#include "kinres/datagen/datagen.h"
#include "kinres/metrics/metrics.h"
#include "kinres/regressor/features.h"
#include "kinres/regressor/regressor.h"
#include "kinres/rewards/rewards.h"
#include "kinres/rl/env.h"
#include "kinres/rl/policy.h"
#include "kinres/rl/ppo.h"
#include "kinres/rl/toy.h"
#include "kinres/sim/kinematics.h"
#include "kinres/sim/model.h"
#include "kinres/sim/scene.h"
#include "kinres/sim/simulator.h"
#include "test_util.h"

namespace kinres {
namespace {

namespace fs = std::filesystem;
using testing::RandomQuat;
using testing::RandomVec;
using testing::RandomVecX;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// 1. Reward exactness

// Plain-array quaternion arithmetic, w first.
struct Q {
  double w, x, y, z;
};

Q Mul(const Q& a, const Q& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Q FromUnit(const UnitQuaternion& q) { return {q.w(), q.x(), q.y(), q.z()}; }

double AngleBetween(const Q& a, const Q& b) {
  const Q r = Mul({a.w, -a.x, -a.y, -a.z}, b);
  const double v = std::sqrt(r.x * r.x + r.y * r.y + r.z * r.z);
  return 2.0 * std::atan2(v, std::abs(r.w));
}

double SquaredDiff(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double OraclePoseReward(const sim::HumanoidModel& m, const VecX& gen, const VecX& ref) {
  double sum = 0.0;
  int j = 0;
  for (size_t l = 1; l < m.links.size(); ++l) {
    if (m.links[l].hinges.empty()) continue;
    Q qa{1, 0, 0, 0}, qb{1, 0, 0, 0};
    for (const sim::Hinge& h : m.links[l].hinges) {
      const double n = std::sqrt(h.axis.x() * h.axis.x() + h.axis.y() * h.axis.y() +
                                 h.axis.z() * h.axis.z());
      const double ax = h.axis.x() / n, ay = h.axis.y() / n, az = h.axis.z() / n;
      const double sa = std::sin(gen[j] / 2), sb = std::sin(ref[j] / 2);
      qa = Mul(qa, {std::cos(gen[j] / 2), sa * ax, sa * ay, sa * az});
      qb = Mul(qb, {std::cos(ref[j] / 2), sb * ax, sb * ay, sb * az});
      ++j;
    }
    const double a = AngleBetween(qb, qa);
    sum += a * a;
  }
  return std::exp(-5.0 * sum);
}

Outcome RewardExactness() {
  const Stopwatch clock;
  const sim::HumanoidModel m = sim::MiniHumanoid();
  const int n = m.dof();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  const int kPairs = 10000;
  for (int trial = 0; trial < kPairs; ++trial) {
    RewardWeights raw;
    raw.imitation = {u(rng), u(rng), u(rng), u(rng), u(rng)};
    raw.finetune = {u(rng), u(rng), u(rng), u(rng), u(rng)};
    const RewardWeights w = raw.Normalized();

    sim::SimFeatures gen;
    gen.pose.joint_angles = RandomVecX(n, rng, 0.7);
    gen.pose.root_pos = RandomVec(rng, 0.3);
    gen.pose.root_rot = RandomQuat(rng);
    gen.vel = Velocity::Zero(n);
    gen.vel.root_lin = RandomVec(rng);
    gen.vel.root_ang = RandomVec(rng);
    ImitationTarget ref;
    ref.pose.joint_angles = RandomVecX(n, rng, 0.7);
    ref.pose.root_pos = gen.pose.root_pos + RandomVec(rng, 0.1);
    ref.pose.root_rot = trial % 2 ? RandomQuat(rng) : gen.pose.root_rot * UnitQuaternion::Yaw(0.2 * u(rng));
    ref.vel = Velocity::Zero(n);
    ref.vel.root_lin = RandomVec(rng);
    ref.vel.root_ang = RandomVec(rng);
    for (int e = 0; e < 5; ++e) {
      gen.end_effectors.push_back(RandomVec(rng));
      ref.end_effectors.push_back(gen.end_effectors.back() + RandomVec(rng, 0.1));
    }
    gen.head = HeadSample::Make(RandomVec(rng), RandomQuat(rng), RandomVec(rng), RandomVec(rng));
    const HeadSample head_ref = HeadSample::Make(gen.head.pos + RandomVec(rng, 0.2),
                                                 RandomQuat(rng), RandomVec(rng), RandomVec(rng));
    const VecX kin = RandomVecX(n, rng, 0.7);
    const VecX mu = RandomVecX(n, rng, 0.3);
    const VecX mu0 = mu + RandomVecX(n, rng, 0.2);

    // Imitation suite.
    const RewardBreakdown b = ImitationReward(m, gen, ref, w.imitation);
    double ee = 0.0;
    for (int e = 0; e < 5; ++e) {
      ee += SquaredDiff(gen.end_effectors[e].data(), ref.end_effectors[e].data(), 3);
    }
    const double rv_lin = SquaredDiff(gen.vel.root_lin.data(), ref.vel.root_lin.data(), 3);
    const double rv_ang = SquaredDiff(gen.vel.root_ang.data(), ref.vel.root_ang.data(), 3);
    const double rq = AngleBetween(FromUnit(gen.pose.root_rot), FromUnit(ref.pose.root_rot));
    const double o_pose = OraclePoseReward(m, gen.pose.joint_angles, ref.pose.joint_angles);
    const double o_ee = std::exp(-4.5 * ee);
    const double o_rv = std::exp(-rv_lin - 0.1 * rv_ang);
    const double o_rq = std::exp(-40.0 * rq * rq);
    const double o_rp =
        std::exp(-45.0 * SquaredDiff(gen.pose.root_pos.data(), ref.pose.root_pos.data(), 3));
    const ImitationWeights& wi = w.imitation;
    const double o_total = wi.pose * o_pose + wi.end_effector * o_ee + wi.root_vel * o_rv +
                           wi.root_rot * o_rq + wi.root_pos * o_rp;
    for (const auto& [got, want] :
         {std::pair{b.Get("pose"), o_pose}, {b.Get("end_effector"), o_ee},
          {b.Get("root_vel"), o_rv}, {b.Get("root_rot"), o_rq}, {b.Get("root_pos"), o_rp},
          {b.total, o_total}}) {
      worst = std::max(worst, std::abs(got - want));
    }

    // Fine-tuning suite.
    const RewardBreakdown f = FinetuneReward(m, gen, kin, head_ref, mu, mu0, w.finetune);
    const double hq = AngleBetween(FromUnit(head_ref.rot), FromUnit(gen.head.rot));
    const double o_hp = std::exp(-10.0 * SquaredDiff(head_ref.pos.data(), gen.head.pos.data(), 3));
    const double o_hq = std::exp(-10.0 * hq * hq);
    const double o_hv = std::exp(
        -0.1 * (SquaredDiff(head_ref.lin_vel_world.data(), gen.head.lin_vel_world.data(), 3) +
                SquaredDiff(head_ref.ang_vel_world.data(), gen.head.ang_vel_world.data(), 3)));
    const double o_pk = OraclePoseReward(m, gen.pose.joint_angles, kin);
    const double o_a = std::exp(-SquaredDiff(mu.data(), mu0.data(), n));
    const double o_l =
        std::exp(-0.1 * SquaredDiff(head_ref.lin_vel_local.data(), gen.head.lin_vel_local.data(), 3));
    const FinetuneWeights& wf = w.finetune;
    const double o_ftotal = wf.head_pos * o_hp + wf.head_rot * o_hq + wf.head_vel * o_hv +
                            wf.pose * o_l * o_pk + wf.action * (1.0 - o_l) * o_a;
    for (const auto& [got, want] :
         {std::pair{f.Get("head_pos"), o_hp}, {f.Get("head_rot"), o_hq},
          {f.Get("head_vel"), o_hv}, {f.Get("pose"), o_pk}, {f.Get("action"), o_a},
          {f.Get("lambda"), o_l}, {f.total, o_ftotal}}) {
      worst = std::max(worst, std::abs(got - want));
    }
  }
  const double secs = clock.Seconds();
  return {worst <= 1e-12 && secs < 10.0,
          fmt::format("{} pairs, worst abs error {:.2e} (limit 1e-12), {:.2f} s (limit 10 s)",
                      kPairs, worst, secs)};
}

// ---------------------------------------------------------------------------
// 2. Residual identity

Outcome ResidualIdentity() {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  std::mt19937_64 rng(7);
  int mismatches = 0;
  int clamped = 0;
  const VecX zero = VecX::Zero(m.dof());
  const VecX lo = m.LowerLimits();
  const VecX hi = m.UpperLimits();
  for (int trial = 0; trial < 1000; ++trial) {
    const VecX q = RandomVecX(m.dof(), rng, 1.5);
    const VecX target = ComputePdTarget(m, q, zero);
    VecX expect(m.dof());
    for (int i = 0; i < m.dof(); ++i) {
      expect[i] = std::min(std::max(q[i], lo[i]), hi[i]);
      if (expect[i] != q[i]) ++clamped;
    }
    for (int i = 0; i < m.dof(); ++i) {
      if (target[i] != expect[i] || target[i] != m.Clamp(q)[i]) ++mismatches;
    }
  }
  return {mismatches == 0,
          fmt::format("1000 poses, {} entries differ bit-wise, {} entries hit a limit",
                      mismatches, clamped)};
}

// ---------------------------------------------------------------------------
// 3. PD and physics oracles

sim::Simulator BoxWorld(const Transform& pose, double friction) {
  sim::Scene scene;
  scene.objects.push_back(sim::MakeBoxObject("box", pose, Vec3(0.2, 0.2, 0.2), 5.0, friction));
  return sim::Simulator(sim::Pendulum(), scene);
}

Outcome PhysicsOracles() {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const VecX kp = m.Kp();
  const VecX kd = m.Kd();
  double pd_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    VecX target(m.dof()), q(m.dof()), qd(m.dof());
    for (int i = 0; i < m.dof(); ++i) {
      target[i] = u(rng);
      q[i] = u(rng);
      qd[i] = 3.0 * u(rng);
    }
    const VecX tau = sim::PdTorque(m, target, q, qd);
    for (int i = 0; i < m.dof(); ++i) {
      pd_err = std::max(pd_err, std::abs(tau[i] - (kp[i] * (target[i] - q[i]) - kd[i] * qd[i])));
    }
  }

  // A dynamic box thrown upwards, 0.5 s of flight.
  double fall_err = 0.0;
  {
    sim::Simulator sim = BoxWorld(Transform::Translation(Vec3(5, 0, 3.0)), 0.5);
    Pose p;
    p.joint_angles = VecX::Zero(sim.model().dof());
    sim::SimState s = sim.MakeState(p, Velocity::Zero(sim.model().dof()));
    s.objects[0].lin_vel = Vec3(0.4, 0.0, 1.0);
    for (int k = 1; k <= 15; ++k) {
      s = sim.StepPassive(s);
      const double t = k / 30.0;
      const Vec3 exact(5.0 + 0.4 * t, 0.0, 3.0 + t - 0.5 * 9.81 * t * t);
      fall_err = std::max(fall_err, (s.objects[0].pose.translation - exact).norm());
    }
  }

  // The humanoid released in the air with zero torque: the root is ballistic.
  double body_err = 0.0;
  {
    sim::Simulator sim(m, sim::Scene{});
    Pose p;
    p.joint_angles = VecX::Zero(m.dof());
    p.root_pos = Vec3(0.0, 0.0, 3.0);
    sim::SimState s = sim.MakeState(p, Velocity::Zero(m.dof()));
    for (int k = 1; k <= 15; ++k) {
      s = sim.StepPassive(s);
      const double t = k / 30.0;
      body_err = std::max(body_err, (s.pose.root_pos - Vec3(0, 0, 3.0 - 0.5 * 9.81 * t * t)).norm());
    }
  }

  // A box sliding on the ground at 1 m/s decelerates at mu g.
  const double mu = 0.5;
  double decel = 0.0;
  {
    sim::Simulator sim = BoxWorld(Transform::Translation(Vec3(5, 0, 0.2)), mu);
    Pose p;
    p.joint_angles = VecX::Zero(sim.model().dof());
    sim::SimState s = sim.MakeState(p, Velocity::Zero(sim.model().dof()));
    for (int k = 0; k < 30; ++k) s = sim.StepPassive(s);
    s.objects[0].lin_vel = Vec3(1.0, 0.0, 0.0);
    s = sim.StepPassive(s);
    const double v0 = s.objects[0].lin_vel.x();
    for (int k = 0; k < 4; ++k) s = sim.StepPassive(s);
    decel = (v0 - s.objects[0].lin_vel.x()) / (4.0 / 30.0);
  }
  const double friction_rel = std::abs(decel - mu * 9.81) / (mu * 9.81);
  return {pd_err <= 1e-12 && fall_err <= 1e-3 && body_err <= 1e-3 && friction_rel <= 0.05,
          fmt::format("pd torque error {:.2e} (limit 1e-12), free fall error box {:.2e} m, "
                      "humanoid {:.2e} m (limit 1e-3), friction {:.3f} m/s^2 vs mu g {:.3f} "
                      "({:.1f}%, limit 5%)",
                      pd_err, fall_err, body_err, decel, mu * 9.81, 100.0 * friction_rel)};
}

// ---------------------------------------------------------------------------
// 4. Gradient checks

Outcome GradientChecks() {
  // Regressor.
  RegressorConfig rc;
  rc.feature_dim = 5;
  rc.dof = 2;
  rc.hidden = 6;
  rc.decoder_hidden = {8};
  const Regressor reg = Regressor::Create(rc, 3);
  std::mt19937_64 rng(4);
  FeatureSequence f;
  f.values = nn::Mat(rc.feature_dim, 6);
  for (int i = 0; i < f.values.size(); ++i) f.values.data()[i] = RandomVecX(1, rng)[0];
  nn::Mat targets(reg.out_dim(), 6);
  for (int i = 0; i < targets.size(); ++i) targets.data()[i] = RandomVecX(1, rng)[0];
  const auto [rloss, rgrads] = reg.LossAndGrad(f, targets);
  Regressor rprobe = reg;
  const auto rcheck = testing::CheckParamGradients(reg.params(), rgrads, [&](const nn::ParamSet& p) {
    rprobe.params() = p;
    return rprobe.MseLoss(f, targets);
  });

  // Policy and value heads through the PPO loss.
  const Task task = PendulumTask();
  PolicyConfig pc;
  pc.hidden = {8};
  pc.log_std = -1.0;
  pc.out_gain = 0.1;
  Policy policy = Policy::Create(task.obs_dim(), task.act_dim(), pc, 4);
  policy.normalizer().Update(CollectRollouts(policy, task, 200, 5, -1, 1).raw_obs);
  RolloutBatch batch = CollectRollouts(policy, task, 200, 5, 0, 1);
  ComputeAdvantages(batch, 0.99, 0.95);
  std::vector<int> all(batch.size());
  for (int i = 0; i < batch.size(); ++i) all[i] = i;
  Eigen::VectorXd x = policy.params().Flatten();
  x += RandomVecX(static_cast<int>(x.size()), rng, 0.01);
  policy.params().Unflatten(x);
  const VecX adv = RandomVecX(batch.size(), rng);
  const PpoHyper h;
  const auto [ploss, pgrads] = PpoLossAndGrad(policy, batch, adv, all, h);
  Policy pprobe = policy;
  const auto pcheck = testing::CheckParamGradients(policy.params(), pgrads, [&](const nn::ParamSet& p) {
    pprobe.params() = p;
    return PpoLossAndGrad(pprobe, batch, adv, all, h).first.total;
  });

  const int64_t rn = reg.params().NumScalars();
  const int64_t pn = policy.params().NumScalars();
  return {rcheck.failures == 0 && pcheck.failures == 0 && rn <= 1000 && pn <= 1000,
          fmt::format("h 1e-5, tolerance 1e-4 relative; regressor {} params, worst {:.2e}, "
                      "{} failures; policy/value {} params, worst {:.2e}, {} failures",
                      rn, rcheck.worst_rel, rcheck.failures, pn, pcheck.worst_rel,
                      pcheck.failures)};
}

// ---------------------------------------------------------------------------
// 5. Toy imitation

Outcome ToyImitation() {
  const Stopwatch clock;
  const Task task = PendulumTask();
  PolicyConfig pc;
  pc.hidden = {64, 64};
  PpoHyper h;
  h.samples_per_iter = 1024;
  h.minibatch = 256;
  h.epochs = 5;
  h.lr = 1e-3;
  PpoTrainer trainer(Policy::Create(task.obs_dim(), task.act_dim(), pc, 1), task, h, 7, 1);
  double rp = 0.0;
  int reached = -1;
  for (int i = 1; i <= 200; ++i) {
    trainer.RunIteration();
    Env env = trainer.task().MakeEnv(0);
    rp = RunEpisode(trainer.policy(), env, true, 0).MeanComponent("pose");
    if (rp >= 0.9) {
      reached = i;
      break;
    }
  }
  const double secs = clock.Seconds();
  if (reached < 0) {
    return {false, fmt::format("mean r_p {:.4f} after 200 iterations (need 0.9), {:.1f} s",
                               rp, secs)};
  }
  return {secs < 600.0, fmt::format("mean r_p {:.4f} after {} iterations (limit 200), {:.1f} s "
                                    "(limit 600 s)",
                                    rp, reached, secs)};
}

// ---------------------------------------------------------------------------
// 6. Residual versus direct PD targets

struct AblationRun {
  int threshold_iteration = -1;  // -1: never reached
  double final_reward = 0.0;
  double final_accel = 0.0;
};

Task StandSitTask(ActionMode mode) {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  Task task;
  task.model = m;
  task.env.action_mode = mode;
  task.random_start = false;
  for (int k = 0; k < 3; ++k) {
    ScenarioSpec spec;
    spec.action = k < 2 ? ActionLabel::kSit : ActionLabel::kOther;
    spec.walk_in = false;
    spec.seed = 100 + k;
    spec.duration = 4.0;
    const GeneratedClip g = GenerateClip(m, spec);
    const FeatureSequence feats = SynthesizeFeatures(g.clip, 0.02, k);
    task.scenes.push_back(g.scene);
    task.refs.push_back(std::make_shared<const EpisodeRefs>(RefsFromClip(m, g.clip, feats.values)));
  }
  return task;
}

constexpr int kAblationIterations = 30;
constexpr double kAblationThreshold = 0.8;

AblationRun RunAblation(ActionMode mode, uint64_t seed) {
  const Task task = StandSitTask(mode);
  PolicyConfig pc;
  pc.hidden = {64, 64};
  pc.log_std = -2.3;
  PpoHyper h;
  h.samples_per_iter = 2048;
  h.minibatch = 512;
  h.epochs = 5;
  h.lr = 3e-4;
  PpoTrainer trainer(Policy::Create(task.obs_dim(), task.act_dim(), pc, seed), task, h, seed, 1);
  AblationRun out;
  for (int i = 1; i <= kAblationIterations; ++i) {
    trainer.RunIteration();
    double reward = 0.0;
    double accel = 0.0;
    const int n = static_cast<int>(task.refs.size());
    for (int k = 0; k < n; ++k) {
      Env env = trainer.task().MakeEnv(k);
      const RolloutResult r = RunEpisode(trainer.policy(), env, true, 0);
      reward += r.MeanTotal() / n;
      accel += AAccel(task.model, r.clip) / n;
    }
    if (out.threshold_iteration < 0 && reward >= kAblationThreshold) out.threshold_iteration = i;
    out.final_reward = reward;
    out.final_accel = accel;
  }
  return out;
}

std::string IterText(int i) {
  return i < 0 ? fmt::format(">{}", kAblationIterations) : std::to_string(i);
}

Outcome ResidualVersusDirect() {
  bool pass = true;
  std::string detail = fmt::format("threshold {} over {} iterations;", kAblationThreshold,
                                   kAblationIterations);
  for (uint64_t seed : {1, 2, 3}) {
    const AblationRun res = RunAblation(ActionMode::kResidual, seed);
    const AblationRun dir = RunAblation(ActionMode::kDirect, seed);
    const int ri = res.threshold_iteration < 0 ? kAblationIterations + 1 : res.threshold_iteration;
    const int di = dir.threshold_iteration < 0 ? kAblationIterations + 1 : dir.threshold_iteration;
    const bool faster = res.threshold_iteration > 0 && ri < di;
    const bool smoother = res.final_accel < dir.final_accel;
    pass = pass && faster && smoother;
    detail += fmt::format(
        " seed {}: iterations {} vs {} ({}), final A_accel {:.2f} vs {:.2f} ({}), final reward "
        "{:.3f} vs {:.3f};",
        seed, IterText(res.threshold_iteration), IterText(dir.threshold_iteration),
        faster ? "ok" : "not fewer", res.final_accel, dir.final_accel,
        smoother ? "ok" : "not lower", res.final_reward, dir.final_reward);
  }
  detail.pop_back();
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 7. Fine-tuning drift correction

struct DriftEval {
  double head_error = 0.0;
  double pose_reward = 0.0;
  bool fallen = false;
};

DriftEval EvaluateDrift(const Policy& policy, const Policy& frozen, const Task& task,
                        const std::vector<HeadSample>& target) {
  Env env = task.MakeEnv(0);
  const RolloutResult r = RunEpisode(policy, env, true, 0, &frozen);
  const std::vector<HeadSample> heads = HeadTrajectory(task.model, r.clip);
  DriftEval e;
  const int n = r.clip.num_frames();
  for (int t = 0; t < n; ++t) e.head_error += (heads[t].pos - target[t].pos).norm() / n;
  e.pose_reward = r.MeanComponent("pose");
  e.fallen = r.fallen;
  return e;
}

Outcome DriftCorrection() {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  ScenarioSpec spec;
  spec.action = ActionLabel::kOther;
  spec.seed = 3;
  spec.duration = 4.0;
  const GeneratedClip g = GenerateClip(m, spec);
  const FeatureSequence feats = SynthesizeFeatures(g.clip, 0.02, 1);

  // 0.3 m to the left of the initial heading, constant over the clip.
  Vec3 left = g.clip.frames[0].pose.root_rot.Rotate(Vec3::UnitY());
  left.z() = 0.0;
  DriftModel drift;
  drift.offset = 0.3 * left.normalized();
  const std::vector<HeadSample> heads = DeriveHeadTrajectory(g.clip, drift);

  std::vector<Pose> poses;
  std::vector<Velocity> vels;
  for (const Frame& f : g.clip.frames) {
    poses.push_back(f.pose);
    vels.push_back(f.vel);
  }
  Task task;
  task.model = m;
  task.scenes = {g.scene};
  task.refs = {std::make_shared<const EpisodeRefs>(
      RefsFromEstimate(m, poses, vels, feats.values, g.clip.action, g.clip.frame_rate,
                       g.scene.InitialObjects(), heads, &g.clip))};
  task.env.init_mode = InitMode::kTest;
  task.env.reward_mode = RewardMode::kFinetune;
  task.random_start = false;

  // Near-zero residuals: the PD servo tracks the kinematic reference.
  PolicyConfig pc;
  pc.hidden = {64, 64};
  pc.out_gain = 1e-3;
  pc.log_std = -2.3;
  const Policy base = Policy::Create(task.obs_dim(), task.act_dim(), pc, 1);
  PpoHyper h;
  h.samples_per_iter = 2048;
  h.minibatch = 256;
  h.epochs = 5;
  h.lr = 3e-4;
  const DriftEval before = EvaluateDrift(base, base, task, heads);
  const FinetuneResult tuned = Finetune(base, base, task, h, 60, 7, 1);
  const DriftEval after = EvaluateDrift(tuned.policy, base, task, heads);
  const double head_drop = 1.0 - after.head_error / before.head_error;
  const double rp_loss = 1.0 - after.pose_reward / before.pose_reward;

  // Lambda: one at matched local velocities, falling with mismatch.
  bool lambda_ok = true;
  std::mt19937_64 rng(11);
  for (int ray = 0; ray < 50; ++ray) {
    const Vec3 v = RandomVec(rng, 2.0);
    const Vec3 dir = RandomVec(rng).normalized();
    if (AdaptiveLambda(v, v) != 1.0) lambda_ok = false;
    double prev = 1.0;
    for (int k = 1; k <= 40; ++k) {
      const double l = AdaptiveLambda(v, v + 0.25 * k * dir);
      if (!(l < prev) || l <= 0.0) lambda_ok = false;
      prev = l;
    }
  }
  return {head_drop >= 0.5 && rp_loss <= 0.1 && !after.fallen && lambda_ok,
          fmt::format("head error {:.4f} -> {:.4f} m ({:.1f}% drop, need 50%), r_p' {:.4f} -> "
                      "{:.4f} ({:.1f}% loss, limit 10%){}, lambda grid {}",
                      before.head_error, after.head_error, 100.0 * head_drop,
                      before.pose_reward, after.pose_reward, 100.0 * rp_loss,
                      after.fallen ? ", fell" : "", lambda_ok ? "ok" : "violated")};
}

// ---------------------------------------------------------------------------
// 8. Metric closed forms

MotionClip StaticClip(const sim::HumanoidModel& m, int frames) {
  MotionClip c;
  c.joint_names = m.DofNames();
  Frame f;
  f.pose.joint_angles = VecX::Zero(m.dof());
  f.pose.root_pos = Vec3(0, 0, 0.9);
  f.vel = Velocity::Zero(m.dof());
  c.frames.assign(frames, f);
  return c;
}

MotionClip RandomClip(const sim::HumanoidModel& m, int frames, std::mt19937_64& rng) {
  MotionClip c = StaticClip(m, frames);
  for (Frame& f : c.frames) {
    f.pose.joint_angles = RandomVecX(m.dof(), rng, 0.5);
    f.pose.root_pos = RandomVec(rng, 0.5);
    f.pose.root_rot = RandomQuat(rng);
  }
  return c;
}

Eigen::Matrix4d RootMatrix(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  const Eigen::Quaterniond q(p.root_rot.w(), p.root_rot.x(), p.root_rot.y(), p.root_rot.z());
  m.topLeftCorner<3, 3>() = q.toRotationMatrix();
  m.topRightCorner<3, 1>() = p.root_pos;
  return m;
}

double Wrap(double a) { return std::remainder(a, 2.0 * M_PI); }

Outcome MetricClosedForms() {
  const sim::HumanoidModel m = sim::MiniHumanoid();
  MotionClip ref = StaticClip(m, 10);
  MotionClip gen = ref;
  for (Frame& f : gen.frames) f.pose.root_pos += Vec3(0.1, 0, 0);
  const double e_root = ERoot(gen, ref);
  gen = ref;
  for (Frame& f : gen.frames) f.pose.joint_angles[3] = 0.5;
  const double e_joint = EJoint(gen, ref);
  MotionClip quad = StaticClip(m, 30);
  const double c = 1.7;
  for (int t = 0; t < 30; ++t) {
    const double time = t / quad.frame_rate;
    quad.frames[t].pose.joint_angles[5] = 0.5 * c * time * time;
  }
  const double accel = AAccel(m, quad);

  std::mt19937_64 rng(8);
  const int k = static_cast<int>(sim::KeypointNames(m).size());
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 6;
    const MotionClip a = RandomClip(m, n, rng);
    const MotionClip b = RandomClip(m, n, rng);
    double root = 0.0, joint = 0.0, mpjpe = 0.0, vel = 0.0, acc = 0.0;
    std::vector<std::vector<Vec3>> ka, kb;
    for (int t = 0; t < n; ++t) {
      const Pose& pa = a.frames[t].pose;
      const Pose& pb = b.frames[t].pose;
      root += (Eigen::Matrix4d::Identity() - RootMatrix(pa) * RootMatrix(pb).inverse()).norm();
      double sq = 0.0;
      for (int j = 0; j < m.dof(); ++j) {
        const double d = Wrap(pa.joint_angles[j] - pb.joint_angles[j]);
        sq += d * d;
      }
      joint += std::sqrt(sq);
      ka.push_back(sim::KeypointPositions(m, pa));
      kb.push_back(sim::KeypointPositions(m, pb));
      double kk = 0.0;
      for (int i = 0; i < k; ++i) kk += (ka[t][i] - kb[t][i]).squaredNorm();
      mpjpe += 1000.0 * std::sqrt(kk);
    }
    for (int t = 0; t + 1 < n; ++t) {
      double sq = 0.0;
      for (int j = 0; j < m.dof(); ++j) {
        const double va = Wrap(a.frames[t + 1].pose.joint_angles[j] - a.frames[t].pose.joint_angles[j]);
        const double vb = Wrap(b.frames[t + 1].pose.joint_angles[j] - b.frames[t].pose.joint_angles[j]);
        sq += (30.0 * (va - vb)) * (30.0 * (va - vb));
      }
      vel += std::sqrt(sq);
    }
    for (int t = 0; t + 2 < n; ++t) {
      for (int j = 0; j < m.dof(); ++j) {
        const double q0 = a.frames[t].pose.joint_angles[j];
        const double q1 = a.frames[t + 1].pose.joint_angles[j];
        const double q2 = a.frames[t + 2].pose.joint_angles[j];
        acc += std::abs((Wrap(q2 - q1) - Wrap(q1 - q0)) * 900.0);
      }
    }
    worst = std::max({worst, std::abs(ERoot(a, b) - root / n), std::abs(EJoint(a, b) - joint / n),
                      std::abs(EMpjpe(m, a, b) - mpjpe / n),
                      std::abs(EVel(m, a, b) - vel / (n - 1)),
                      std::abs(AAccel(m, a) - acc / (n - 2))});
  }
  const bool pass = std::abs(e_root - 0.1) <= 1e-9 && std::abs(e_joint - 0.5) <= 1e-9 &&
                    std::abs(accel - c) <= 0.01 * c && worst <= 1e-9;
  return {pass, fmt::format("e_root {:.12f} (0.1), e_joint {:.12f} (0.5), a_accel {:.4f} vs "
                            "|c| {} (1%), random oracles worst {:.2e} (limit 1e-9)",
                            e_root, e_joint, accel, c, worst)};
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism

int Shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome EndToEndDeterminism() {
  const fs::path root = testing::TempDir("acceptance_e2e");
  const std::string cli = std::string("'") + KINRES_CLI + "'";
  std::vector<std::string> failures;
  std::vector<fs::path> runs;
  for (const char* name : {"run_a", "run_b"}) {
    const fs::path dir = root / name;
    const std::string data = (dir / "data").string();
    const std::string manifest = (dir / "data" / "manifest.json").string();
    const std::vector<std::string> steps = {
        cli + " gen-data --seed 5 --count 2 --duration 2 --action sit --action other --out " +
            data,
        cli + " train-policy --seed 5 --iterations 5 --manifest " + manifest + " --out " +
            (dir / "train").string(),
        cli + " rollout --seed 5 --policy " + (dir / "train" / "policy.ckpt").string() +
            " --manifest " + manifest + " --clip other_001 --out " + (dir / "rollout").string(),
        cli + " eval --gen " + (dir / "rollout" / "rollout.jsonl").string() + " --ref " +
            (dir / "rollout" / "reference.jsonl").string() + " --out " +
            (dir / "eval").string(),
    };
    for (const std::string& s : steps) {
      const int rc = Shell(
          "KINRES_PPO__SAMPLES_PER_ITER=1024 KINRES_PPO__MINIBATCH=256 KINRES_PPO__EPOCHS=4 " + s);
      if (rc != 0) failures.push_back(fmt::format("'{}' exited {}", s, rc));
    }
    runs.push_back(dir);
  }
  const std::vector<std::string> csvs = {"train/training.csv", "rollout/breakdown.csv",
                                         "rollout/joints.csv", "eval/metrics.csv"};
  int identical = 0;
  for (const std::string& f : csvs) {
    const std::string a = Slurp(runs[0] / f);
    const std::string b = Slurp(runs[1] / f);
    if (a.empty()) {
      failures.push_back(f + " missing or empty");
    } else if (a != b) {
      failures.push_back(f + " differs");
    } else {
      ++identical;
    }
  }
  std::string detail =
      fmt::format("{} of {} CSVs byte-identical across two runs", identical, csvs.size());
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace kinres

int main(int argc, char** argv) {
  using namespace kinres;
  const std::vector<Criterion> criteria = {
      {1, "reward exactness", RewardExactness},
      {2, "residual identity", ResidualIdentity},
      {3, "PD and physics oracles", PhysicsOracles},
      {4, "gradient checks", GradientChecks},
      {5, "toy pendulum imitation", ToyImitation},
      {6, "residual vs direct ablation", ResidualVersusDirect},
      {7, "fine-tuning drift correction", DriftCorrection},
      {8, "metric closed forms", MetricClosedForms},
      {9, "end-to-end determinism", EndToEndDeterminism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const Stopwatch clock;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    fmt::print("{} {} {} ({:.1f} s): {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
               clock.Seconds(), o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
