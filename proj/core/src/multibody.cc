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

#include "kinres/sim/multibody.h"

#include <utility>

namespace kinres::sim {

Vec6 CrossMotion(const Vec6& v, const Vec6& m) {
  const Vec3 w = v.head<3>(), v0 = v.tail<3>();
  const Vec3 mw = m.head<3>(), m0 = m.tail<3>();
  Vec6 out;
  out << w.cross(mw), w.cross(m0) + v0.cross(mw);
  return out;
}

Vec6 CrossForce(const Vec6& v, const Vec6& f) {
  const Vec3 w = v.head<3>(), v0 = v.tail<3>();
  const Vec3 fn = f.head<3>(), ff = f.tail<3>();
  Vec6 out;
  out << w.cross(fn) + v0.cross(ff), w.cross(ff);
  return out;
}

Multibody::Multibody(HumanoidModel model) : model_(std::move(model)) {
  model_.Validate();
  root_dofs_ = model_.fixed_base ? 0 : 6;
  const int n_links = model_.num_links();
  children_.resize(n_links);
  link_last_dof_.assign(n_links, -1);
  for (int b = 0; b < n_links; ++b) {
    const Link& link = model_.links[b];
    if (link.parent >= 0) children_[link.parent].push_back(b);
    int prev = link.parent >= 0 ? link_last_dof_[link.parent] : -1;
    for (size_t k = 0; k < link.hinges.size(); ++k) {
      dof_link_.push_back(b);
      dof_parent_.push_back(prev);
      prev = num_hinges_++;
    }
    link_last_dof_[b] = prev;
  }
  link_world_.resize(n_links);
  link_vel_.resize(n_links);
  dof_col_.resize(num_hinges_);
  dof_vel_before_.resize(num_hinges_);
  SetState(model_.base, VecX::Zero(num_hinges_), VecX::Zero(nv()));
}

void Multibody::SetState(const Transform& root, const VecX& q, const VecX& u) {
  u_ = u;
  const Transform root_tf = model_.fixed_base ? model_.base : root;
  root_pos_ = root_tf.translation;
  link_world_[0] = root_tf;
  Vec6 root_vel = Vec6::Zero();
  if (!model_.fixed_base) {
    const Vec3 v = u.head<3>(), w = u.segment<3>(3);
    root_vel << w, v + root_pos_.cross(w);
  }
  link_vel_[0] = root_vel;

  int j = 0;
  for (int b = 0; b < model_.num_links(); ++b) {
    const Link& link = model_.links[b];
    Transform frame;
    Vec6 vel;
    if (link.parent < 0) {
      frame = root_tf;
      vel = root_vel;
    } else {
      const Transform& pf = link_world_[link.parent];
      frame = {pf.rotation, pf.Apply(link.joint_offset)};
      vel = link_vel_[link.parent];
    }
    const Vec3 anchor = frame.translation;
    for (const Hinge& h : link.hinges) {
      const Vec3 axis = frame.rotation.Rotate(h.axis).normalized();
      Vec6 col;
      col << axis, anchor.cross(axis);
      dof_col_[j] = col;
      dof_vel_before_[j] = vel;
      vel += col * u[root_dofs_ + j];
      frame.rotation = frame.rotation * UnitQuaternion::FromAxisAngle(h.axis, q[j]);
      ++j;
    }
    link_world_[b] = frame;
    link_vel_[b] = vel;
  }
}

Vec6 Multibody::RootColumn(int r) const {
  Vec6 col = Vec6::Zero();
  if (r < 3) {
    col[3 + r] = 1.0;
  } else {
    const Vec3 e = Vec3::Unit(r - 3);
    col << e, root_pos_.cross(e);
  }
  return col;
}

Vec3 Multibody::PointVelocity(int link, const Vec3& p) const {
  const Vec6& v = link_vel_[link];
  return v.tail<3>() + v.head<3>().cross(p);
}

void Multibody::AddPointJacobian(int link, const Vec3& p, double scale,
                                 Eigen::Ref<MatX> out, int col0) const {
  for (int j = link_last_dof_[link]; j >= 0; j = dof_parent_[j]) {
    const Vec6& s = dof_col_[j];
    out.col(col0 + root_dofs_ + j) +=
        scale * (s.tail<3>() + s.head<3>().cross(p));
  }
  if (root_dofs_ == 6) {
    // v_root columns are the identity; omega columns give omega x (p - root).
    out.block<3, 3>(0, col0) += scale * Mat3::Identity();
    out.block<3, 3>(0, col0 + 3) -= scale * Skew(p - root_pos_);
  }
}

Mat6 Multibody::SpatialInertia(int b) const {
  const Link& link = model_.links[b];
  const Transform& tf = link_world_[b];
  const Mat3 r = tf.rotation.ToMatrix();
  const Mat3 ic = r * link.inertia.asDiagonal() * r.transpose();
  const Vec3 c = tf.Apply(link.com);
  const Mat3 cx = Skew(c);
  const double m = link.mass;
  Mat6 out;
  out.topLeftCorner<3, 3>() = ic + m * cx * cx.transpose();
  out.topRightCorner<3, 3>() = m * cx;
  out.bottomLeftCorner<3, 3>() = m * cx.transpose();
  out.bottomRightCorner<3, 3>() = m * Mat3::Identity();
  return out;
}

MatX Multibody::MassMatrix() const {
  const int n_links = model_.num_links();
  std::vector<Mat6> composite(n_links);
  for (int b = 0; b < n_links; ++b) composite[b] = SpatialInertia(b);
  for (int b = n_links - 1; b > 0; --b) {
    composite[model_.links[b].parent] += composite[b];
  }

  MatX m = MatX::Zero(nv(), nv());
  for (int j = 0; j < num_hinges_; ++j) {
    const Vec6 f = composite[dof_link_[j]] * dof_col_[j];
    const int col = root_dofs_ + j;
    for (int i = j; i >= 0; i = dof_parent_[i]) {
      const double v = dof_col_[i].dot(f);
      m(root_dofs_ + i, col) = v;
      m(col, root_dofs_ + i) = v;
    }
    for (int r = 0; r < root_dofs_; ++r) {
      const double v = RootColumn(r).dot(f);
      m(r, col) = v;
      m(col, r) = v;
    }
  }
  for (int r = 0; r < root_dofs_; ++r) {
    const Vec6 f = composite[0] * RootColumn(r);
    for (int s = 0; s < root_dofs_; ++s) m(s, r) = RootColumn(s).dot(f);
  }
  int j = 0;
  for (const Link& link : model_.links) {
    for (const Hinge& h : link.hinges) {
      m(root_dofs_ + j, root_dofs_ + j) += h.armature;
      ++j;
    }
  }
  return m;
}

VecX Multibody::Bias(const Vec3& gravity,
                     const std::vector<Vec6>& external) const {
  const int n_links = model_.num_links();
  std::vector<Vec6> acc(n_links), force(n_links);
  Vec6 base_acc;
  base_acc << Vec3::Zero(), -gravity;
  if (!model_.fixed_base) {
    const Vec3 v = u_.head<3>(), w = u_.segment<3>(3);
    base_acc.tail<3>() += v.cross(w);
  }

  int j = 0;
  for (int b = 0; b < n_links; ++b) {
    const Link& link = model_.links[b];
    Vec6 a = link.parent < 0 ? base_acc : acc[link.parent];
    for (size_t k = 0; k < link.hinges.size(); ++k, ++j) {
      a += CrossMotion(dof_vel_before_[j], dof_col_[j] * u_[root_dofs_ + j]);
    }
    acc[b] = a;
    const Mat6 inertia = SpatialInertia(b);
    const Vec6& v = link_vel_[b];
    force[b] = inertia * a + CrossForce(v, inertia * v);
    if (!external.empty()) force[b] -= external[b];
  }
  for (int b = n_links - 1; b > 0; --b) {
    force[model_.links[b].parent] += force[b];
  }

  VecX tau(nv());
  for (int r = 0; r < root_dofs_; ++r) tau[r] = RootColumn(r).dot(force[0]);
  for (int i = 0; i < num_hinges_; ++i) {
    tau[root_dofs_ + i] = dof_col_[i].dot(force[dof_link_[i]]);
  }
  return tau;
}

VecX Multibody::GeneralizedForce(int link, const Vec3& p, const Vec3& f) const {
  MatX jac = MatX::Zero(3, nv());
  AddPointJacobian(link, p, 1.0, jac, 0);
  return jac.transpose() * f;
}

}  // namespace kinres::sim
