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

#include "kinres/sim/simulator.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "kinres/core/error.h"
#include "kinres/sim/kinematics.h"

namespace kinres::sim {
namespace {

HumanoidModel RigidBodyModel(const SceneObject& o) {
  HumanoidModel m;
  m.name = o.object_id;
  Link body;
  body.name = o.object_id;
  body.mass = o.mass;
  body.inertia = o.Inertia();
  body.geom = {GeomType::kSphere, Vec3(0.01, 0, 0), {}};
  m.links.push_back(body);
  m.head = {o.object_id, 0, Vec3::Zero()};
  return m;
}

// Sphere against an oriented box. Normal points from the box to the sphere.
bool SphereBox(const Vec3& center, double radius, const Transform& box,
               const Vec3& half, Vec3* point, Vec3* normal, double* depth) {
  const Vec3 local = box.Inverse().Apply(center);
  const Vec3 clamped = local.cwiseMax(-half).cwiseMin(half);
  const Vec3 diff = local - clamped;
  const double dist = diff.norm();
  if (dist > 0.0) {
    if (dist >= radius) return false;
    const Vec3 n_local = diff / dist;
    *normal = box.rotation.Rotate(n_local);
    *depth = radius - dist;
    *point = box.Apply(clamped);
    return true;
  }
  // Centre inside: push out through the nearest face.
  const Vec3 gap = half - local.cwiseAbs();
  int axis = 0;
  gap.minCoeff(&axis);
  Vec3 n_local = Vec3::Zero();
  n_local[axis] = local[axis] >= 0.0 ? 1.0 : -1.0;
  *normal = box.rotation.Rotate(n_local);
  *depth = radius + gap[axis];
  *point = center;
  return true;
}

bool Finite(const SimState& s) {
  auto ok = [](const auto& v) { return v.allFinite(); };
  if (!ok(s.pose.root_pos) || !ok(s.pose.joint_angles) || !ok(s.vel.root_lin) ||
      !ok(s.vel.root_ang) || !ok(s.vel.joint_vel) || !s.pose.root_rot.Coeffs().allFinite()) {
    return false;
  }
  for (const ObjectState& o : s.objects) {
    if (!ok(o.pose.translation) || !ok(o.lin_vel) || !ok(o.ang_vel) ||
        !o.pose.rotation.Coeffs().allFinite()) {
      return false;
    }
  }
  return true;
}

VecX PackVelocity(const Velocity& v, bool fixed_base) {
  const int rd = fixed_base ? 0 : 6;
  VecX u(rd + v.joint_vel.size());
  if (!fixed_base) u << v.root_lin, v.root_ang, v.joint_vel;
  else u = v.joint_vel;
  return u;
}

UnitQuaternion Integrate(const UnitQuaternion& q, const Vec3& w_avg, double h) {
  return UnitQuaternion::FromRotationVector(w_avg * h) * q;
}

}  // namespace

std::string_view TerminationName(Termination t) {
  switch (t) {
    case Termination::kAlive:
      return "alive";
    case Termination::kFallen:
      return "fallen";
    case Termination::kHorizon:
      return "horizon";
  }
  return "alive";
}

int SimConfig::Substeps() const {
  if (!(sim_dt > 0.0) || !(control_dt > 0.0)) {
    throw ValidationError("time steps must be positive");
  }
  const double ratio = control_dt / sim_dt;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n) {
    throw ValidationError(fmt::format(
        "control_dt {} is not an integer multiple of sim_dt {}", control_dt, sim_dt));
  }
  return static_cast<int>(n);
}

VecX SimConfig::TorqueLimits(int dof) const {
  if (torque_limits.size() == 0) return VecX::Constant(dof, default_torque_limit);
  if (torque_limits.size() != dof) {
    throw ValidationError(fmt::format("{} torque limits for {} DoF",
                                      torque_limits.size(), dof));
  }
  return torque_limits;
}

void SimConfig::Validate() const {
  Substeps();
  if (!(contact_stiffness > 0.0) || !(contact_damping >= 0.0) ||
      !(ground_friction >= 0.0) || !(friction_velocity > 0.0)) {
    throw ValidationError("invalid contact parameters");
  }
  if (!gravity.allFinite()) throw ValidationError("gravity must be finite");
}

VecX PdTorque(const HumanoidModel& model, const VecX& target, const VecX& q,
              const VecX& qdot, const VecX& limits) {
  const int n = model.dof();
  if (target.size() != n || q.size() != n || qdot.size() != n ||
      (limits.size() != 0 && limits.size() != n)) {
    throw ValidationError(fmt::format(
        "pd_torque expects {} entries (target {}, pose {}, velocity {}, limits {})",
        n, target.size(), q.size(), qdot.size(), limits.size()));
  }
  VecX tau(n);
  int j = 0;
  for (const Link& link : model.links) {
    for (const Hinge& h : link.hinges) {
      tau[j] = h.kp * (target[j] - q[j]) - h.kd * qdot[j];
      if (limits.size() != 0) tau[j] = std::clamp(tau[j], -limits[j], limits[j]);
      ++j;
    }
  }
  return tau;
}

Simulator::Simulator(HumanoidModel model, Scene scene, SimConfig config)
    : humanoid_(std::move(model)), scene_(std::move(scene)), config_(std::move(config)) {
  config_.Validate();
  scene_.Validate();
  for (const SceneObject& o : scene_.objects) {
    if (o.is_static) {
      dynamic_index_.push_back(-1);
    } else {
      dynamic_index_.push_back(static_cast<int>(objects_.size()));
      objects_.emplace_back(RigidBodyModel(o));
    }
  }
  kp_ = humanoid_.model().Kp();
  kd_ = humanoid_.model().Kd();
  limits_ = config_.TorqueLimits(humanoid_.model().dof());
}

SimState Simulator::MakeState(const Pose& pose, const Velocity& vel) const {
  SimState s;
  s.pose = pose;
  s.vel = vel;
  s.objects = scene_.InitialObjects();
  return s;
}

SimState Simulator::Step(const SimState& state, const VecX& pd_target) {
  if (pd_target.size() != model().dof()) {
    throw ValidationError(fmt::format("PD target has {} entries, model has {} DoF",
                                      pd_target.size(), model().dof()));
  }
  return Advance(state, &pd_target);
}

SimState Simulator::StepPassive(const SimState& state) {
  return Advance(state, nullptr);
}

SimState Simulator::Advance(const SimState& state, const VecX* target) {
  if (state.pose.dof() != model().dof() || state.vel.joint_vel.size() != model().dof()) {
    throw ValidationError("state DoF does not match the model");
  }
  if (state.objects.size() != scene_.objects.size()) {
    throw ValidationError(fmt::format("state has {} objects, scene has {}",
                                      state.objects.size(), scene_.objects.size()));
  }
  SimState s = state;
  const int n = config_.Substeps();
  for (int i = 0; i < n; ++i) {
    Substep(s, target);
    if (!Finite(s)) {
      throw DivergenceError(fmt::format("simulation diverged at t = {:.4f} s", s.time));
    }
  }
  return s;
}

std::vector<Contact> Simulator::FindContacts(const SimState& s) const {
  std::vector<Contact> out;
  const HumanoidModel& m = model();
  const auto links = LinkTransforms(m, s.pose);

  for (int b = 0; b < m.num_links(); ++b) {
    const Geom& g = m.links[b].geom;
    if (scene_.ground) {
      for (const GeomSphere& sp : GeomSpheres(g, links[b], false)) {
        const double depth = sp.radius - sp.center.z();
        if (depth <= 0.0) continue;
        out.push_back({0, b, -1, 0, sp.center - sp.radius * Vec3::UnitZ(),
                       Vec3::UnitZ(), depth, config_.ground_friction});
      }
    }
    const Transform geom_tf = links[b] * g.local;
    const double reach = g.BoundingRadius();
    for (size_t k = 0; k < scene_.objects.size(); ++k) {
      const SceneObject& obj = scene_.objects[k];
      const Transform& opose = s.objects[k].pose;
      const int body_b = dynamic_index_[k] < 0 ? -1 : 1 + dynamic_index_[k];
      for (const BoxPart& part : obj.parts) {
        const Transform box = opose * part.local;
        if ((box.translation - geom_tf.translation).norm() >
            reach + part.half_extents.norm()) {
          continue;
        }
        for (const GeomSphere& sp : GeomSpheres(g, links[b], true)) {
          Contact c;
          if (!SphereBox(sp.center, sp.radius, box, part.half_extents, &c.point,
                         &c.normal, &c.depth)) {
            continue;
          }
          c.body_a = 0;
          c.link_a = b;
          c.body_b = body_b;
          c.link_b = 0;
          c.mu = obj.friction;
          out.push_back(c);
        }
      }
    }
  }

  if (scene_.ground) {
    for (size_t k = 0; k < scene_.objects.size(); ++k) {
      if (dynamic_index_[k] < 0) continue;
      const SceneObject& obj = scene_.objects[k];
      for (const BoxPart& part : obj.parts) {
        const Geom box{GeomType::kBox, part.half_extents, part.local};
        for (const GeomSphere& corner : GeomSpheres(box, s.objects[k].pose, false)) {
          const double depth = -corner.center.z();
          if (depth <= 0.0) continue;
          out.push_back({1 + dynamic_index_[k], 0, -1, 0, corner.center,
                         Vec3::UnitZ(), depth, obj.friction});
        }
      }
    }
  }
  return out;
}

void Simulator::Substep(SimState& s, const VecX* target) {
  const double h = config_.sim_dt;
  const HumanoidModel& m = model();
  const bool fixed = m.fixed_base;
  const int nh = humanoid_.nv();
  const int rd = humanoid_.root_dofs();
  const int dof = m.dof();

  std::vector<int> offset(objects_.size() + 1);
  offset[0] = 0;
  int total = nh;
  for (size_t k = 0; k < objects_.size(); ++k) {
    offset[k + 1] = total;
    total += objects_[k].nv();
  }

  VecX u(total);
  u.head(nh) = PackVelocity(s.vel, fixed);
  humanoid_.SetState(s.pose.RootTransform(), s.pose.joint_angles, u.head(nh));
  std::vector<int> object_of_body(objects_.size(), -1);
  for (size_t k = 0; k < scene_.objects.size(); ++k) {
    const int d = dynamic_index_[k];
    if (d < 0) continue;
    object_of_body[d] = static_cast<int>(k);
    const ObjectState& o = s.objects[k];
    Eigen::Matrix<double, 6, 1> uo;
    uo << o.lin_vel, o.ang_vel;
    u.segment<6>(offset[d + 1]) = uo;
    objects_[d].SetState(o.pose, VecX(), uo);
  }

  MatX a = MatX::Zero(total, total);
  VecX rhs = VecX::Zero(total);
  {
    const MatX mh = humanoid_.MassMatrix();
    a.topLeftCorner(nh, nh) = mh;
    rhs.head(nh) = mh * u.head(nh) - h * humanoid_.Bias(config_.gravity, {});
  }
  for (size_t d = 0; d < objects_.size(); ++d) {
    const int o = offset[d + 1];
    const MatX mo = objects_[d].MassMatrix();
    a.block(o, o, 6, 6) = mo;
    rhs.segment(o, 6) = mo * u.segment(o, 6) - h * objects_[d].Bias(config_.gravity, {});
  }

  const double k = config_.contact_stiffness;
  const double c = config_.contact_damping;
  MatX jac(3, total);
  for (const Contact& ct : FindContacts(s)) {
    jac.setZero();
    auto add_body = [&](int body, int link, double sign) {
      if (body < 0) return;
      if (body == 0) humanoid_.AddPointJacobian(link, ct.point, sign, jac, 0);
      else objects_[body - 1].AddPointJacobian(link, ct.point, sign, jac, offset[body]);
    };
    add_body(ct.body_a, ct.link_a, 1.0);
    add_body(ct.body_b, ct.link_b, -1.0);
    const Vec3 v = jac * u;
    const Vec3& nrm = ct.normal;
    const double vn = nrm.dot(v);
    const Vec3 vt = v - vn * nrm;
    const double fn = std::max(0.0, k * ct.depth - c * vn);
    const double ct_coef = ct.mu * fn / std::max(vt.norm(), config_.friction_velocity);
    const Mat3 nn = nrm * nrm.transpose();
    const Mat3 damp = (h * c + 0.5 * h * h * k) * nn + h * ct_coef * (Mat3::Identity() - nn);
    a.noalias() += jac.transpose() * damp * jac;
    rhs.noalias() += jac.transpose() * (h * (k * ct.depth - 0.5 * h * k * vn) * nrm);
  }

  VecX u_new;
  if (target == nullptr) {
    u_new = a.ldlt().solve(rhs);
  } else {
    const VecX& q = s.pose.joint_angles;
    const VecX qd = u.segment(rd, dof);
    std::vector<char> saturated(dof, 0);
    VecX tau_sat = VecX::Zero(dof);
    for (int iter = 0; iter < 4; ++iter) {
      MatX a_act = a;
      VecX rhs_act = rhs;
      for (int j = 0; j < dof; ++j) {
        const int i = rd + j;
        if (saturated[j]) {
          rhs_act[i] += h * tau_sat[j];
        } else {
          a_act(i, i) += h * kd_[j] + 0.5 * h * h * kp_[j];
          rhs_act[i] += h * (kp_[j] * ((*target)[j] - q[j]) - 0.5 * h * kp_[j] * qd[j]);
        }
      }
      u_new = a_act.ldlt().solve(rhs_act);
      bool changed = false;
      for (int j = 0; j < dof; ++j) {
        if (saturated[j]) continue;
        const double qd_new = u_new[rd + j];
        const double tau = kp_[j] * ((*target)[j] - q[j] - 0.5 * h * (qd[j] + qd_new)) -
                           kd_[j] * qd_new;
        if (std::abs(tau) > limits_[j]) {
          saturated[j] = 1;
          // Clamp the torque the explicit PD law would command at this state.
          const double tau_explicit = kp_[j] * ((*target)[j] - q[j]) - kd_[j] * qd[j];
          tau_sat[j] = std::clamp(tau_explicit, -limits_[j], limits_[j]);
          changed = true;
        }
      }
      if (!changed) break;
    }
  }

  const VecX u_avg = 0.5 * (u + u_new);
  if (!fixed) {
    s.pose.root_pos += h * u_avg.head<3>();
    s.pose.root_rot = Integrate(s.pose.root_rot, u_avg.segment<3>(3), h);
    s.vel.root_lin = u_new.head<3>();
    s.vel.root_ang = u_new.segment<3>(3);
  }
  s.pose.joint_angles += h * u_avg.segment(rd, dof);
  s.vel.joint_vel = u_new.segment(rd, dof);
  for (size_t d = 0; d < objects_.size(); ++d) {
    ObjectState& o = s.objects[object_of_body[d]];
    const int off = offset[d + 1];
    o.pose.translation += h * u_avg.segment<3>(off);
    o.pose.rotation = Integrate(o.pose.rotation, u_avg.segment<3>(off + 3), h);
    o.lin_vel = u_new.segment<3>(off);
    o.ang_vel = u_new.segment<3>(off + 3);
  }
  s.time += h;
}

Termination Simulator::CheckTermination(const SimState& state) const {
  const HumanoidModel& m = model();
  if (!m.fixed_base && state.pose.root_pos.z() < config_.fall_height) {
    return Termination::kFallen;
  }
  if (scene_.ground) {
    const auto links = LinkTransforms(m, state.pose);
    for (int b = 0; b < m.num_links(); ++b) {
      if (m.IsFoot(b)) continue;
      for (const GeomSphere& sp : GeomSpheres(m.links[b].geom, links[b], false)) {
        if (sp.center.z() - sp.radius < 0.0) return Termination::kFallen;
      }
    }
  }
  if (state.time >= config_.horizon - 1e-9) return Termination::kHorizon;
  return Termination::kAlive;
}

SimFeatures Simulator::Features(const SimState& state) {
  const HumanoidModel& m = model();
  humanoid_.SetState(state.pose.RootTransform(), state.pose.joint_angles,
                     PackVelocity(state.vel, m.fixed_base));
  SimFeatures f;
  f.pose = state.pose;
  f.vel = state.vel;
  for (const Site& site : m.end_effectors) {
    f.end_effectors.push_back(humanoid_.LinkWorld(site.link).Apply(site.offset));
  }
  const Transform& head_link = humanoid_.LinkWorld(m.head.link);
  const Vec3 head_pos = head_link.Apply(m.head.offset);
  f.head = HeadSample::Make(head_pos, head_link.rotation,
                            humanoid_.PointVelocity(m.head.link, head_pos),
                            humanoid_.LinkVelocity(m.head.link).head<3>());
  return f;
}

SimState Step(const SimState& state, const VecX& pd_target, const SimConfig& config,
              const HumanoidModel& model, const Scene& scene) {
  Simulator sim(model, scene, config);
  return sim.Step(state, pd_target);
}

Termination DetectTermination(const SimState& state, const SimConfig& config,
                              const HumanoidModel& model) {
  Scene ground_only;
  Simulator sim(model, ground_only, config);
  return sim.CheckTermination(state);
}

SimFeatures ExtractSimFeatures(const SimState& state, const HumanoidModel& model) {
  Simulator sim(model, Scene{}, SimConfig{});
  return sim.Features(state);
}

}  // namespace kinres::sim
