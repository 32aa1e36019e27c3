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

#ifndef KINRES_SIM_SIMULATOR_H_
#define KINRES_SIM_SIMULATOR_H_

#include <memory>
#include <optional>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/sim/model.h"
#include "kinres/sim/multibody.h"
#include "kinres/sim/scene.h"

namespace kinres::sim {

struct SimConfig {
  double sim_dt = 1.0 / 450.0;
  double control_dt = 1.0 / 30.0;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  // Penalty contact, per contact point.
  double contact_stiffness = 3.0e4;  // N/m
  double contact_damping = 1.5e3;    // N s/m
  double ground_friction = 0.9;
  // Tangential speed below which Coulomb friction is regularized (m/s).
  double friction_velocity = 0.01;
  double default_torque_limit = 200.0;  // N m
  VecX torque_limits;                   // per DoF; empty uses the default
  double fall_height = 0.4;             // m, root height kill plane
  double horizon = 6.0;                 // s

  // control_dt / sim_dt; throws ValidationError unless it is an integer.
  int Substeps() const;
  VecX TorqueLimits(int dof) const;
  void Validate() const;
};

struct SimState {
  Pose pose;
  Velocity vel;
  std::vector<ObjectState> objects;  // scene order
  double time = 0.0;
};

enum class Termination { kAlive, kFallen, kHorizon };
std::string_view TerminationName(Termination t);

struct SimFeatures {
  Pose pose;
  Velocity vel;
  std::vector<Vec3> end_effectors;  // model order
  HeadSample head;
};

// kappa = kp (target - q) - kd qdot, clamped per DoF to +-limits (an empty
// `limits` means unbounded). Throws ValidationError on length mismatch.
VecX PdTorque(const HumanoidModel& model, const VecX& target, const VecX& q,
              const VecX& qdot, const VecX& limits = VecX());

struct Contact {
  int body_a = 0;  // 0 humanoid, k > 0 dynamic object k - 1
  int link_a = 0;
  int body_b = -1;  // -1 static world
  int link_b = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // from b towards a
  double depth = 0.0;
  double mu = 0.0;
};

// Reduced-coordinate humanoid plus free-floating dynamic objects, stepped with
// penalty contact. PD stiffness and damping, contact springs, and contact
// damping/friction are integrated implicitly at the step midpoint; gyroscopic
// and gravity terms are explicit. Deterministic for identical inputs.
// Single-threaded; use one instance per thread.
class Simulator {
 public:
  Simulator(HumanoidModel model, Scene scene, SimConfig config = {});

  const HumanoidModel& model() const { return humanoid_.model(); }
  const Scene& scene() const { return scene_; }
  const SimConfig& config() const { return config_; }

  SimState MakeState(const Pose& pose, const Velocity& vel) const;

  // One control step (Substeps() integration steps) towards `pd_target`.
  // Throws DivergenceError on non-finite state.
  SimState Step(const SimState& state, const VecX& pd_target);
  // Same with all actuators off.
  SimState StepPassive(const SimState& state);

  Termination CheckTermination(const SimState& state) const;
  SimFeatures Features(const SimState& state);
  std::vector<Contact> FindContacts(const SimState& state) const;

 private:
  SimState Advance(const SimState& state, const VecX* target);
  void Substep(SimState& s, const VecX* target);

  Multibody humanoid_;
  Scene scene_;
  SimConfig config_;
  std::vector<int> dynamic_index_;  // scene object -> dynamic body, or -1
  std::vector<Multibody> objects_;
  VecX kp_, kd_, limits_;
};

// Free-function forms; they build a Simulator per call.
SimState Step(const SimState& state, const VecX& pd_target,
              const SimConfig& config, const HumanoidModel& model,
              const Scene& scene);
Termination DetectTermination(const SimState& state, const SimConfig& config,
                              const HumanoidModel& model);
SimFeatures ExtractSimFeatures(const SimState& state, const HumanoidModel& model);

}  // namespace kinres::sim

#endif  // KINRES_SIM_SIMULATOR_H_
