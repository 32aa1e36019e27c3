// Copyright 2026 The kinres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kinres/datagen/datagen.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kinres/core/clip_io.h"
#include "kinres/core/error.h"
#include "kinres/regressor/features.h"
#include "kinres/sim/kinematics.h"

namespace kinres {

using nlohmann::json;
using sim::HumanoidModel;

namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Joint indices the scripts drive, looked up by name.
struct Rig {
  int waist_roll, waist_pitch;
  int sh_pitch[2], sh_roll[2];
  int hip_roll[2], hip_pitch[2], hip_yaw[2], knee[2], ankle[2];
  int dof;

  explicit Rig(const HumanoidModel& m) {
    const auto names = m.DofNames();
    auto idx = [&](const std::string& n) {
      auto it = std::find(names.begin(), names.end(), n);
      if (it == names.end()) {
        throw ValidationError(fmt::format(
            "motion scripts need joint '{}' (mini humanoid joint set)", n));
      }
      return static_cast<int>(it - names.begin());
    };
    waist_roll = idx("waist_roll");
    waist_pitch = idx("waist_pitch");
    const char* side[2] = {"l", "r"};
    for (int s = 0; s < 2; ++s) {
      const std::string x = side[s];
      sh_pitch[s] = idx("shoulder_" + x + "_pitch");
      sh_roll[s] = idx("shoulder_" + x + "_roll");
      hip_roll[s] = idx("hip_" + x + "_roll");
      hip_pitch[s] = idx("hip_" + x + "_pitch");
      hip_yaw[s] = idx("hip_" + x + "_yaw");
      knee[s] = idx("knee_" + x);
      ankle[s] = idx("ankle_" + x);
    }
    dof = m.dof();
  }

  // Keeps the feet parallel to the floor.
  void FlatFeet(VecX& q) const {
    for (int s = 0; s < 2; ++s) q[ankle[s]] = -(q[hip_pitch[s]] + q[knee[s]]);
  }
};

struct Key {
  double t;
  Eigen::Vector2d xy;
  double yaw;  // unwrapped
  VecX q;
  // Optional object pose (position, yaw) for objects carried by the script.
  Eigen::Vector2d obj_xy;
  double obj_yaw;
};

// Packs a key into one channel vector: x, y, yaw, object x, y, yaw, joints.
VecX Channels(const Key& k) {
  VecX c(6 + k.q.size());
  c << k.xy, k.yaw, k.obj_xy, k.obj_yaw, k.q;
  return c;
}

// Piecewise cubic Hermite through the keys with Catmull-Rom tangents limited
// per channel so that no channel overshoots its neighbouring keys. Tangents
// are zero at the ends, so clips start and finish at rest.
VecX Interpolate(const std::vector<Key>& keys, double t) {
  const size_t n = keys.size();
  if (t <= keys.front().t) return Channels(keys.front());
  if (t >= keys.back().t) return Channels(keys.back());
  size_t i = 0;
  while (i + 1 < n && keys[i + 1].t <= t) ++i;
  auto tangent = [&](size_t k) -> VecX {
    VecX m = VecX::Zero(Channels(keys[k]).size());
    if (k == 0 || k + 1 == n) return m;
    const VecX a = Channels(keys[k - 1]), b = Channels(keys[k]),
               c = Channels(keys[k + 1]);
    const double hl = keys[k].t - keys[k - 1].t;
    const double hr = keys[k + 1].t - keys[k].t;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      const double dl = (b[j] - a[j]) / hl, dr = (c[j] - b[j]) / hr;
      if (dl * dr <= 0.0) continue;
      const double cr = (c[j] - a[j]) / (hl + hr);
      const double lim = 3.0 * std::min(std::abs(dl), std::abs(dr));
      m[j] = std::clamp(cr, -lim, lim);
    }
    return m;
  };
  const double h = keys[i + 1].t - keys[i].t;
  const double s = (t - keys[i].t) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return Channels(keys[i]) * h00 + tangent(i) * (h10 * h) +
         Channels(keys[i + 1]) * h01 + tangent(i + 1) * (h11 * h);
}

Eigen::Vector2d Dir(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }

double Unwrap(double from, double to) { return from + WrapAngle(to - from); }

class Script {
 public:
  Script(const Rig& rig, Eigen::Vector2d xy, double yaw, Eigen::Vector2d obj_xy,
         double obj_yaw)
      : rig_(rig) {
    cur_ = {0.0, xy, yaw, VecX::Zero(rig.dof), obj_xy, obj_yaw};
    keys_.push_back(cur_);
  }

  double time() const { return cur_.t; }
  const Key& current() const { return cur_; }
  Key& mutable_current() { return cur_; }

  void Push(double dt) {
    cur_.t += dt;
    keys_.push_back(cur_);
  }

  void Hold(double dt) {
    if (dt > 0.0) Push(dt);
  }

  // Turns in place towards `yaw` at `rate` rad/s.
  void Turn(double yaw, double rate) {
    const double target = Unwrap(cur_.yaw, yaw);
    const double d = std::abs(target - cur_.yaw);
    if (d < 1e-9) return;
    cur_.q = Standing(cur_.q);
    cur_.yaw = target;
    Push(0.15 + d / rate);
  }

  // Walks along the polyline `path` (starting at the current position) at
  // `speed`, keyframing every quarter stride, for at most `max_time`.
  // `carry` moves the object with the root when set.
  void Walk(const std::vector<Eigen::Vector2d>& path, double speed,
            double step, double max_time, bool carry = false,
            const VecX* upper = nullptr) {
    std::vector<Eigen::Vector2d> pts = {cur_.xy};
    pts.insert(pts.end(), path.begin(), path.end());
    double total = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) total += (pts[i] - pts[i - 1]).norm();
    if (total < 1e-9 || max_time <= 0.0) return;
    const double dur = std::min(total / speed, max_time);
    const double quarter = step / speed / 2.0;  // a stride is two steps
    const int n = std::max(2, static_cast<int>(std::ceil(dur / quarter)));
    const double amp = std::asin(std::clamp(step / 1.66, 0.05, 0.9));
    const double t0 = cur_.t;
    const Eigen::Vector2d obj_offset = cur_.obj_xy - cur_.xy;
    for (int k = 1; k <= n; ++k) {
      const double tau = dur * k / n;
      const double s = speed * tau;
      // Point and heading at arc length s.
      double acc = 0.0;
      Eigen::Vector2d p = pts.back(), d = (pts.back() - pts[pts.size() - 2]).normalized();
      for (size_t i = 1; i < pts.size(); ++i) {
        const double len = (pts[i] - pts[i - 1]).norm();
        if (acc + len >= s) {
          d = (pts[i] - pts[i - 1]) / len;
          p = pts[i - 1] + d * (s - acc);
          break;
        }
        acc += len;
      }
      const double phase = kPi / 2.0 * k;
      VecX q = upper ? *upper : Standing(cur_.q);
      const double sn = std::sin(phase);
      const bool last = k == n;
      for (int side = 0; side < 2; ++side) {
        const double sgn = side == 0 ? 1.0 : -1.0;
        const double swing = last ? 0.0 : sgn * sn;
        q[rig_.hip_pitch[side]] = -amp * swing;
        q[rig_.knee[side]] = last ? 0.0 : 1.6 * amp * std::max(0.0, swing);
        if (!upper) q[rig_.sh_pitch[side]] = 0.6 * amp * swing;
      }
      rig_.FlatFeet(q);
      cur_.xy = p;
      cur_.yaw = Unwrap(cur_.yaw, std::atan2(d.y(), d.x()));
      cur_.q = q;
      if (carry) {
        cur_.obj_xy = p + obj_offset;
      }
      cur_.t = t0 + tau;
      keys_.push_back(cur_);
    }
  }

  void Pose(const VecX& q, double dt) {
    cur_.q = q;
    Push(dt);
  }

  VecX Standing(const VecX& like) const {
    VecX q = VecX::Zero(like.size());
    return q;
  }

  const std::vector<Key>& keys() const { return keys_; }

 private:
  const Rig& rig_;
  Key cur_;
  std::vector<Key> keys_;
};

struct ObjectPlan {
  sim::SceneObject object;
  bool moves = false;
};

MotionClip Render(const HumanoidModel& model, const Script& script,
                  const ObjectPlan& obj, const ScenarioSpec& spec) {
  MotionClip clip;
  clip.frame_rate = spec.frame_rate;
  clip.action = spec.action;
  clip.joint_names = model.DofNames();
  clip.object_ids = {obj.object.object_id};
  const int frames = static_cast<int>(std::lround(spec.duration * spec.frame_rate)) + 1;
  const auto& keys = script.keys();
  const double z_obj = obj.object.initial.pose.translation.z();
  for (int i = 0; i < frames; ++i) {
    const double t = i / spec.frame_rate;
    Frame f;
    const VecX c = Interpolate(keys, t);
    f.pose.joint_angles = model.Clamp(c.tail(c.size() - 6));
    f.pose.root_rot = UnitQuaternion::Yaw(c[2]);
    f.pose.root_pos = Vec3(c[0], c[1], 0.0);
    f.pose.root_pos.z() = sim::GroundedRootHeight(model, f.pose);
    ObjectState o = obj.object.initial;
    if (obj.moves) {
      o.pose.translation = Vec3(c[3], c[4], z_obj);
      o.pose.rotation = UnitQuaternion::Yaw(c[5]);
    }
    o.lin_vel.setZero();
    o.ang_vel.setZero();
    f.objects.push_back(o);
    f.vel = Velocity::Zero(model.dof());
    clip.frames.push_back(std::move(f));
  }
  clip = FiniteDifferenceVelocities(std::move(clip));
  const auto heads = HeadTrajectory(model, clip);
  for (int i = 0; i < frames; ++i) clip.frames[i].head = heads[i];
  clip.Validate();
  return clip;
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

GeneratedClip GenerateClip(const HumanoidModel& model, const ScenarioSpec& spec) {
  if (!(spec.duration > 0.0) || !(spec.frame_rate > 0.0)) {
    throw ValidationError("scenario duration and frame rate must be positive");
  }
  const Rig rig(model);
  std::mt19937_64 rng(SplitMix(spec.seed));
  const double speed = spec.speed > 0.0 ? spec.speed : Uniform(rng, 0.85, 1.15);
  const double step = spec.step_length > 0.0 ? spec.step_length
                                             : Uniform(rng, 0.5, 0.7);
  const double beta = Uniform(rng, -kPi, kPi);    // actor angle on the circle
  const double heading = Uniform(rng, -kPi, kPi);  // initial facing
  const double style = Uniform(rng, 0.0, 1.0);     // posture variation
  const bool walk_in = spec.action != ActionLabel::kSit || spec.walk_in;
  if (walk_in && spec.action != ActionLabel::kOther && spec.radius < 1.5) {
    throw ValidationError(fmt::format(
        "radius {} m places the object inside the start pose (need >= 1.5 m)",
        spec.radius));
  }
  const Eigen::Vector2d start = spec.radius * Dir(beta);
  const Eigen::Vector2d to_center = -start.normalized();
  const double face_center = std::atan2(to_center.y(), to_center.x());

  ObjectPlan obj;
  GeneratedClip out;
  const double dur = spec.duration;

  switch (spec.action) {
    case ActionLabel::kSit: {
      // Chair at the origin, facing the actor within +-60 degrees.
      const double chair_yaw =
          walk_in ? beta + Uniform(rng, -kPi / 3, kPi / 3) : Uniform(rng, -kPi, kPi);
      obj.object = sim::MakeChair(
          "chair", {UnitQuaternion::Yaw(chair_yaw), Vec3::Zero()});
      const Eigen::Vector2d front = Dir(chair_yaw);
      const Eigen::Vector2d presit = 0.37 * front;
      const Eigen::Vector2d approach = 0.9 * front;
      Eigen::Vector2d xy0 = walk_in ? start : presit;
      const double yaw0 = walk_in ? heading : chair_yaw;
      Script s(rig, xy0, yaw0, Eigen::Vector2d::Zero(), chair_yaw);
      const double sit_time = 1.3 + 0.4 * style;
      if (walk_in) {
        const Eigen::Vector2d to_app = approach - xy0;
        s.Turn(std::atan2(to_app.y(), to_app.x()), 3.0);
        // Leave time for the final turn, the sit and a short seated hold.
        const double budget = dur - s.time() - 1.2 - sit_time - 0.4;
        const double v = std::max(speed, (to_app.norm() + 0.53) / std::max(budget, 0.5));
        s.Walk({approach, presit}, v, step, std::max(budget, 0.5));
        s.Turn(chair_yaw, 3.5);
      } else {
        s.Hold(1.0 + 0.5 * style);
      }
      // Crouch with a forward lean, then settle on the seat.
      VecX q = VecX::Zero(rig.dof);
      q[rig.waist_pitch] = 0.35 + 0.1 * style;
      for (int side = 0; side < 2; ++side) {
        q[rig.hip_pitch[side]] = -0.8;
        q[rig.knee[side]] = 0.95;
        q[rig.sh_pitch[side]] = -0.4;
      }
      rig.FlatFeet(q);
      s.mutable_current().xy = 0.2 * front;
      s.Pose(q, 0.55 * sit_time);
      q[rig.waist_pitch] = 0.1 + 0.1 * style;
      for (int side = 0; side < 2; ++side) {
        q[rig.hip_pitch[side]] = -1.5;
        q[rig.knee[side]] = 1.5;
        q[rig.sh_pitch[side]] = -0.2;
      }
      rig.FlatFeet(q);
      s.mutable_current().xy = -0.05 * front;
      s.Pose(q, 0.45 * sit_time);
      s.Hold(std::max(0.1, dur - s.time()));
      out.clip = Render(model, s, obj, spec);
      break;
    }
    case ActionLabel::kPush: {
      const Vec3 half(0.3, 0.35, 0.55);
      const double reach = 0.55 + half.x();  // root to box centre while pushing
      obj.object = sim::MakeBoxObject(
          "box", {UnitQuaternion::Yaw(beta), Vec3(0, 0, half.z())}, half, 15.0, 0.5);
      obj.moves = true;
      Script s(rig, start, heading, Eigen::Vector2d::Zero(), beta);
      s.Turn(face_center, 3.0);
      const double push_time = 1.6 + 0.4 * style;
      const double walk_dist = spec.radius - reach - 0.15;
      const double budget = dur - s.time() - 0.5 - push_time - 0.3;
      const double v = std::max(speed, walk_dist / std::max(budget, 0.5));
      s.Walk({start + to_center * walk_dist}, v, step, std::max(budget, 0.5));
      VecX arms = VecX::Zero(rig.dof);
      arms[rig.waist_pitch] = 0.35;
      for (int side = 0; side < 2; ++side) {
        arms[rig.sh_pitch[side]] = -1.2;
        arms[rig.sh_roll[side]] = side == 0 ? -0.1 : 0.1;
      }
      s.Pose(arms, 0.5);
      // Close the remaining gap, then push at half speed.
      const double push_speed = 0.45 + 0.15 * style;
      s.Walk({start + to_center * (walk_dist + 0.15)}, 0.4, step, 1.0, false, &arms);
      s.Walk({s.current().xy + to_center * push_speed * push_time}, push_speed,
             0.4, push_time, true, &arms);
      s.Hold(std::max(0.1, dur - s.time()));
      out.clip = Render(model, s, obj, spec);
      break;
    }
    case ActionLabel::kAvoid: {
      obj.object = sim::MakeObstacle(
          "obstacle", {UnitQuaternion::Yaw(Uniform(rng, -kPi, kPi)), Vec3::Zero()});
      const double side = style < 0.5 ? 1.0 : -1.0;
      const Eigen::Vector2d normal(-to_center.y(), to_center.x());
      const Eigen::Vector2d pass = side * (0.8 + 0.2 * style) * normal;
      const Eigen::Vector2d end = pass + to_center * spec.radius;
      Script s(rig, start, heading, Eigen::Vector2d::Zero(), 0.0);
      const Eigen::Vector2d to_pass = pass - start;
      s.Turn(std::atan2(to_pass.y(), to_pass.x()), 3.0);
      s.Walk({pass, end}, speed, step, dur - s.time() - 0.3);
      s.Hold(std::max(0.1, dur - s.time()));
      out.clip = Render(model, s, obj, spec);
      break;
    }
    case ActionLabel::kOther: {
      // Idle standing with a slow arm gesture; no object interaction.
      obj.object = sim::MakeObstacle(
          "obstacle", {UnitQuaternion(), Vec3(spec.radius + 3.0, 0, 0)});
      Script s(rig, start, heading, Eigen::Vector2d::Zero(), 0.0);
      VecX q = VecX::Zero(rig.dof);
      s.Hold(1.0);
      q[rig.sh_pitch[0]] = -0.3 - 0.2 * style;
      q[rig.sh_roll[1]] = -0.2;
      s.Pose(q, 1.5);
      s.Pose(VecX::Zero(rig.dof), 1.5);
      s.Hold(std::max(0.1, dur - s.time()));
      out.clip = Render(model, s, obj, spec);
      break;
    }
  }
  out.scene.objects = {obj.object};
  out.scene.Validate();
  return out;
}

std::vector<HeadSample> HeadTrajectory(const HumanoidModel& model,
                                       const MotionClip& clip) {
  const int n = clip.num_frames();
  if (n < 2) throw ValidationError("head trajectory needs >= 2 frames");
  std::vector<Vec3> pos(n);
  std::vector<UnitQuaternion> rot(n);
  for (int t = 0; t < n; ++t) {
    const auto links = sim::LinkTransforms(model, clip.frames[t].pose);
    pos[t] = sim::SitePosition(links, model.head);
    rot[t] = links[model.head.link].rotation;
  }
  std::vector<HeadSample> out(n);
  for (int t = 0; t < n; ++t) {
    const int a = t + 1 < n ? t : n - 2;
    const Vec3 v = (pos[a + 1] - pos[a]) * clip.frame_rate;
    const Vec3 w =
        (rot[a + 1] * rot[a].Inverse()).ToRotationVector() * clip.frame_rate;
    out[t] = HeadSample::Make(pos[t], rot[t], v, w);
  }
  return out;
}

bool DriftModel::IsZero() const {
  return offset.isZero(0.0) && bias_rate.isZero(0.0) && yaw_bias_rate == 0.0 &&
         pos_noise == 0.0 && rot_noise == 0.0;
}

std::vector<HeadSample> DeriveHeadTrajectory(const MotionClip& clip,
                                             const DriftModel& drift) {
  std::vector<HeadSample> heads;
  heads.reserve(clip.frames.size());
  for (int t = 0; t < clip.num_frames(); ++t) {
    if (!clip.frames[t].head) {
      throw ValidationError(fmt::format("frame {} has no head sample", t));
    }
    heads.push_back(*clip.frames[t].head);
  }
  if (drift.IsZero()) return heads;
  if (drift.pos_noise < 0.0 || drift.rot_noise < 0.0 || drift.reversion < 0.0) {
    throw ValidationError("drift noise scales and reversion must be >= 0");
  }
  const double dt = clip.dt();
  const int n = clip.num_frames();
  std::mt19937_64 rng(SplitMix(drift.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  // Exact OU discretization.
  const double decay = std::exp(-drift.reversion * dt);
  const double scale = drift.reversion > 0.0
                           ? std::sqrt((1.0 - decay * decay) / (2.0 * drift.reversion))
                           : std::sqrt(dt);
  std::vector<Vec3> dpos(n);
  std::vector<double> dyaw(n);
  Vec3 ou = Vec3::Zero();
  double ou_yaw = 0.0;
  for (int t = 0; t < n; ++t) {
    const double time = t * dt;
    if (t > 0) {
      for (int k = 0; k < 3; ++k) {
        ou[k] = decay * ou[k] + drift.pos_noise * scale * normal(rng);
      }
      ou_yaw = decay * ou_yaw + drift.rot_noise * scale * normal(rng);
    }
    dpos[t] = drift.offset + drift.bias_rate * time + ou;
    dyaw[t] = drift.yaw_bias_rate * time + ou_yaw;
  }
  std::vector<HeadSample> out(n);
  for (int t = 0; t < n; ++t) {
    const int a = t + 1 < n ? t : n - 2;
    const Vec3 dv = (dpos[a + 1] - dpos[a]) / dt;
    const double dw = (dyaw[a + 1] - dyaw[a]) / dt;
    const UnitQuaternion yaw = UnitQuaternion::Yaw(dyaw[t]);
    // Yaw perturbation about the world vertical through the head.
    out[t] = HeadSample::Make(heads[t].pos + dpos[t], yaw * heads[t].rot,
                              yaw.Rotate(heads[t].lin_vel_world) + dv,
                              heads[t].ang_vel_world + Vec3(0, 0, dw));
  }
  return out;
}

FeatureSequence SynthesizeFeatures(const MotionClip& clip, double noise,
                                   uint64_t seed) {
  if (noise < 0.0) throw ValidationError("feature noise must be >= 0");
  FeatureSequence f;
  f.values.resize(FeatureLayout::kDim, clip.num_frames());
  std::mt19937_64 rng(SplitMix(seed ^ 0x5eedf00dULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = 0.9;
  const double b = std::sqrt(1.0 - a * a);
  VecX n = VecX::Zero(FeatureLayout::kDim);
  for (int t = 0; t < clip.num_frames(); ++t) {
    if (!clip.frames[t].head) {
      throw ValidationError(fmt::format("frame {} has no head sample", t));
    }
    for (int k = 0; k < FeatureLayout::kAction; ++k) {
      const double e = normal(rng);
      n[k] = t == 0 ? noise * e : a * n[k] + b * noise * e;
    }
    f.values.col(t) = ContextFeatures(*clip.frames[t].head, clip.action) + n;
  }
  return f;
}

std::vector<ManifestEntry> DatasetManifest::Split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == name) out.push_back(e);
  }
  return out;
}

DatasetManifest PlanDataset(const DatasetOptions& o) {
  if (o.n_per_action < 2) {
    throw ValidationError("dataset needs at least 2 clips per action");
  }
  if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1)");
  }
  DatasetManifest m;
  m.seed = o.seed;
  m.feature_noise = o.feature_noise;
  const int n_train = std::clamp(
      static_cast<int>(std::lround(o.n_per_action * o.train_fraction)), 1,
      o.n_per_action - 1);
  std::set<uint64_t> seeds;
  for (ActionLabel a : o.actions) {
    for (int i = 0; i < o.n_per_action; ++i) {
      ManifestEntry e;
      e.clip_id = fmt::format("{}_{:03d}", ActionName(a), i);
      e.spec.action = a;
      e.spec.duration = o.duration;
      uint64_t s = SplitMix(o.seed * 0x100000001b3ULL +
                            static_cast<uint64_t>(a) * 100003ULL + i);
      while (!seeds.insert(s).second) s = SplitMix(s);
      e.spec.seed = s;
      e.spec.speed = 0.0;
      e.split = i < n_train ? "train" : "test";
      e.clip_path = "clips/" + e.clip_id + ".jsonl";
      e.scene_path = "scenes/" + e.clip_id + ".json";
      e.features_path = "features/" + e.clip_id + ".txt";
      m.entries.push_back(e);
    }
  }
  return m;
}

void RegenerateDataset(const HumanoidModel& model,
                       const DatasetManifest& manifest,
                       const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (const char* sub : {"clips", "scenes", "features"}) {
    fs::create_directories(dir / sub);
  }
  for (const auto& e : manifest.entries) {
    const GeneratedClip g = GenerateClip(model, e.spec);
    SaveClip(g.clip, dir / e.clip_path);
    sim::SaveScene(g.scene, dir / e.scene_path);
    SaveFeatures(SynthesizeFeatures(g.clip, manifest.feature_noise, e.spec.seed),
                 dir / e.features_path);
  }
  SaveManifest(manifest, dir / "manifest.json");
}

DatasetManifest GenerateDataset(const HumanoidModel& model,
                                const DatasetOptions& options,
                                const std::filesystem::path& dir) {
  DatasetManifest m = PlanDataset(options);
  RegenerateDataset(model, m, dir);
  return m;
}

void SaveManifest(const DatasetManifest& m, const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["seed"] = m.seed;
  j["feature_noise"] = m.feature_noise;
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"clip_id", e.clip_id},
                       {"split", e.split},
                       {"clip", e.clip_path},
                       {"scene", e.scene_path},
                       {"features", e.features_path},
                       {"spec",
                        {{"action", std::string(ActionName(e.spec.action))},
                         {"radius", e.spec.radius},
                         {"duration", e.spec.duration},
                         {"frame_rate", e.spec.frame_rate},
                         {"speed", e.spec.speed},
                         {"step_length", e.spec.step_length},
                         {"walk_in", e.spec.walk_in},
                         {"seed", e.spec.seed}}}});
  }
  j["entries"] = entries;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open manifest '{}'", path.string()));
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    if (j.at("version").get<int>() != 1) {
      throw ParseError(fmt::format("{}: unsupported manifest version", path.string()));
    }
    m.seed = j.at("seed").get<uint64_t>();
    m.feature_noise = j.at("feature_noise").get<double>();
    for (const json& ej : j.at("entries")) {
      ManifestEntry e;
      e.clip_id = ej.at("clip_id").get<std::string>();
      e.split = ej.at("split").get<std::string>();
      e.clip_path = ej.at("clip").get<std::string>();
      e.scene_path = ej.at("scene").get<std::string>();
      e.features_path = ej.at("features").get<std::string>();
      const json& s = ej.at("spec");
      e.spec.action = ParseAction(s.at("action").get<std::string>());
      e.spec.radius = s.at("radius").get<double>();
      e.spec.duration = s.at("duration").get<double>();
      e.spec.frame_rate = s.at("frame_rate").get<double>();
      e.spec.speed = s.at("speed").get<double>();
      e.spec.step_length = s.at("step_length").get<double>();
      e.spec.walk_in = s.at("walk_in").get<bool>();
      e.spec.seed = s.at("seed").get<uint64_t>();
      if (e.split != "train" && e.split != "test") {
        throw ParseError(fmt::format("{}: clip '{}' has split '{}'", path.string(),
                                     e.clip_id, e.split));
      }
      m.entries.push_back(e);
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ValidationError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return m;
}

void SaveFeatures(const FeatureSequence& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << "features " << f.dim() << ' ' << f.length() << '\n';
  for (int t = 0; t < f.length(); ++t) {
    std::string line;
    for (int k = 0; k < f.dim(); ++k) {
      if (k > 0) line += ' ';
      line += FormatReal(f.values(k, t));
    }
    out << line << '\n';
  }
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

FeatureSequence LoadFeatures(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open features '{}'", path.string()));
  std::string tag;
  int dim = -1, len = -1;
  in >> tag >> dim >> len;
  if (tag != "features" || dim <= 0 || len <= 0) {
    throw ParseError(fmt::format("{}:1: bad features header", path.string()));
  }
  FeatureSequence f;
  f.values.resize(dim, len);
  for (int t = 0; t < len; ++t) {
    for (int k = 0; k < dim; ++k) {
      std::string tok;
      if (!(in >> tok)) {
        throw ParseError(fmt::format("{}:{}: truncated features", path.string(), t + 2));
      }
      char* end = nullptr;
      f.values(k, t) = std::strtod(tok.c_str(), &end);
      if (*end != '\0') {
        throw ParseError(fmt::format("{}:{}: bad number '{}'", path.string(), t + 2, tok));
      }
    }
  }
  return f;
}

namespace {
constexpr const char* kHeadHeader =
    "frame,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz";
}  // namespace

void SaveHeadTrajectory(const std::vector<HeadSample>& heads,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << kHeadHeader << '\n';
  for (size_t t = 0; t < heads.size(); ++t) {
    const HeadSample& h = heads[t];
    const double v[13] = {h.pos.x(), h.pos.y(), h.pos.z(), h.rot.w(),
                          h.rot.x(), h.rot.y(), h.rot.z(),
                          h.lin_vel_world.x(), h.lin_vel_world.y(),
                          h.lin_vel_world.z(), h.ang_vel_world.x(),
                          h.ang_vel_world.y(), h.ang_vel_world.z()};
    out << t;
    for (double x : v) out << ',' << FormatReal(x);
    out << '\n';
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::vector<HeadSample> LoadHeadTrajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open head trajectory '{}'", path.string()));
  }
  std::string line;
  if (!std::getline(in, line) || line != kHeadHeader) {
    throw ParseError(fmt::format("{}:1: expected header '{}'", path.string(),
                                 kHeadHeader));
  }
  std::vector<HeadSample> heads;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (tok.empty() || *end != '\0' || !std::isfinite(x)) {
        throw ParseError(fmt::format("{}:{}: bad number '{}'", path.string(),
                                     lineno, tok));
      }
      v.push_back(x);
    }
    if (v.size() != 14) {
      throw ParseError(fmt::format("{}:{}: expected 14 fields, got {}",
                                   path.string(), lineno, v.size()));
    }
    if (static_cast<size_t>(v[0]) != heads.size()) {
      throw ParseError(fmt::format("{}:{}: frames must be consecutive from 0",
                                   path.string(), lineno));
    }
    UnitQuaternion q;
    try {
      q = UnitQuaternion::FromComponents(v[4], v[5], v[6], v[7]);
    } catch (const ValidationError& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
    heads.push_back(HeadSample::Make(Vec3(v[1], v[2], v[3]), q,
                                     Vec3(v[8], v[9], v[10]),
                                     Vec3(v[11], v[12], v[13])));
  }
  if (heads.size() < 2) {
    throw ParseError(fmt::format("{}: head trajectory needs >= 2 frames",
                                 path.string()));
  }
  return heads;
}

double MinClearance(const HumanoidModel& model, const MotionClip& clip,
                    const sim::SceneObject& object) {
  double best = std::numeric_limits<double>::infinity();
  for (const Frame& f : clip.frames) {
    Transform obj_pose = object.initial.pose;
    for (const ObjectState& o : f.objects) {
      if (o.object_id == object.object_id) obj_pose = o.pose;
    }
    const auto links = sim::LinkTransforms(model, f.pose);
    for (int b = 0; b < model.num_links(); ++b) {
      for (const auto& s : sim::GeomSpheres(model.links[b].geom, links[b], true)) {
        for (const sim::BoxPart& part : object.parts) {
          const Transform box = obj_pose * part.local;
          const Vec3 local = box.Inverse().Apply(s.center);
          const Vec3 q = local.cwiseAbs() - part.half_extents;
          const double outside = q.cwiseMax(0.0).norm();
          const double inside = std::min(q.maxCoeff(), 0.0);
          best = std::min(best, outside + inside - s.radius);
        }
      }
    }
  }
  return best;
}

}  // namespace kinres
