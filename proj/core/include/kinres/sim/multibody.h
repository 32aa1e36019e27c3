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

#ifndef KINRES_SIM_MULTIBODY_H_
#define KINRES_SIM_MULTIBODY_H_

#include <vector>

#include <Eigen/Core>

#include "kinres/core/transform.h"
#include "kinres/sim/model.h"

namespace kinres::sim {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;

// Spatial vectors are expressed in world coordinates about the world origin,
// ordered (angular, linear). A motion vector is (omega, v_O) where v_O is the
// velocity of the body point currently at the origin.
Vec6 CrossMotion(const Vec6& v, const Vec6& m);
Vec6 CrossForce(const Vec6& v, const Vec6& f);

// Reduced-coordinate rigid-body tree built from a model. Generalized
// velocity is (v_root, omega_root, qdot) for a floating base, or qdot alone for
// a fixed base; v_root and omega_root are world-frame.
class Multibody {
 public:
  explicit Multibody(HumanoidModel model);

  const HumanoidModel& model() const { return model_; }
  int nv() const { return root_dofs_ + num_hinges_; }
  int root_dofs() const { return root_dofs_; }
  int num_hinges() const { return num_hinges_; }

  // Recomputes link poses, motion subspaces and spatial velocities.
  void SetState(const Transform& root, const VecX& q, const VecX& u);

  const Transform& LinkWorld(int link) const { return link_world_[link]; }
  const Vec6& LinkVelocity(int link) const { return link_vel_[link]; }
  Vec3 PointVelocity(int link, const Vec3& p) const;
  // 3 x nv linear Jacobian of the world point p rigidly attached to `link`.
  // Writes into `out` starting at column `col0`.
  void AddPointJacobian(int link, const Vec3& p, double scale,
                        Eigen::Ref<MatX> out, int col0) const;

  // Joint-space inertia including hinge armature.
  MatX MassMatrix() const;
  // Coriolis, centrifugal and gravity terms minus the generalized image of
  // per-link external spatial forces (may be empty).
  VecX Bias(const Vec3& gravity, const std::vector<Vec6>& external) const;
  // Generalized image of a world force applied at world point p on `link`.
  VecX GeneralizedForce(int link, const Vec3& p, const Vec3& f) const;

 private:
  Vec6 RootColumn(int r) const;
  Mat6 SpatialInertia(int link) const;

  HumanoidModel model_;
  int root_dofs_ = 0;
  int num_hinges_ = 0;
  std::vector<int> dof_link_;    // hinge -> owning link
  std::vector<int> dof_parent_;  // hinge -> previous hinge up the tree, or -1
  std::vector<int> link_last_dof_;  // last hinge at or above the link, or -1
  std::vector<std::vector<int>> children_;

  // State-dependent caches.
  VecX u_;
  std::vector<Transform> link_world_;
  std::vector<Vec6> link_vel_;
  std::vector<Vec6> dof_col_;       // motion subspace column per hinge
  std::vector<Vec6> dof_vel_before_;  // frame velocity before the hinge acts
  Vec3 root_pos_ = Vec3::Zero();
};

}  // namespace kinres::sim

#endif  // KINRES_SIM_MULTIBODY_H_
