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

#ifndef KINRES_SIM_MODEL_H_
#define KINRES_SIM_MODEL_H_

#include <filesystem>
#include <string>
#include <vector>

#include "kinres/core/motion_clip.h"
#include "kinres/core/transform.h"

namespace kinres::sim {

enum class GeomType { kSphere, kCapsule, kBox };

// Collision primitive in its owner's frame. `size` is (radius, -, -) for
// spheres, (radius, half_length, -) for capsules along local z, and the half
// extents for boxes.
struct Geom {
  GeomType type = GeomType::kSphere;
  Vec3 size = Vec3(0.05, 0.0, 0.0);
  Transform local;

  double BoundingRadius() const;
};

// One hinge degree of freedom. A link may carry several, applied in order
// about the same joint origin (ball joints are three hinges).
struct Hinge {
  std::string name;
  Vec3 axis = Vec3::UnitY();
  double lower = -3.14159;
  double upper = 3.14159;
  double kp = 100.0;
  double kd = 10.0;
  double armature = 0.01;
};

struct Link {
  std::string name;
  int parent = -1;                  // -1 for the root
  Vec3 joint_offset = Vec3::Zero();  // joint origin in the parent frame
  std::vector<Hinge> hinges;
  double mass = 1.0;
  Vec3 inertia = Vec3::Ones() * 0.01;  // principal moments at the COM
  Vec3 com = Vec3::Zero();
  Geom geom;
};

struct Site {
  std::string name;
  int link = 0;
  Vec3 offset = Vec3::Zero();
};

// Kinematic tree with inertial data, joint limits, and PD gains. Links are
// stored in topological order (parents before children), root first.
struct HumanoidModel {
  std::string name = "model";
  bool fixed_base = false;
  Transform base;  // root placement when fixed_base
  std::vector<Link> links;
  std::vector<Site> end_effectors;
  Site head;
  std::vector<std::string> foot_links;

  int num_links() const { return static_cast<int>(links.size()); }
  int dof() const;
  // Index of the first hinge of each link in the flat DoF vector.
  std::vector<int> DofOffsets() const;
  std::vector<std::string> DofNames() const;
  VecX LowerLimits() const;
  VecX UpperLimits() const;
  VecX Kp() const;
  VecX Kd() const;
  double TotalMass() const;
  int LinkIndex(const std::string& name) const;  // -1 when absent
  bool IsFoot(int link) const;
  VecX Clamp(const VecX& q) const;

  // Tree structure, positive masses and gains, unique names, valid sites.
  // Throws ValidationError.
  void Validate() const;
};

// Solid-shape inertia for `mass` distributed over `geom`, about its center.
Vec3 GeomInertia(const Geom& geom, double mass);

// Ten-link, sixteen-DoF, 50 kg, ~1.6 m humanoid used by the default scenes.
HumanoidModel MiniHumanoid();

// Fixed-base single hinge (about y) used for the tracking toy task.
HumanoidModel Pendulum(double mass = 1.0, double length = 0.5, double kp = 8.0,
                       double kd = 0.8);

// Root height that puts the lowest point of any foot geometry on z = 0 for the
// given pose (root position z is ignored).
double GroundedRootHeight(const HumanoidModel& model, const Pose& pose);

HumanoidModel LoadModel(const std::filesystem::path& path);
void SaveModel(const HumanoidModel& model, const std::filesystem::path& path);
std::string ModelToJson(const HumanoidModel& model);
HumanoidModel ModelFromJson(const std::string& text,
                            const std::string& source = "<model>");

}  // namespace kinres::sim

#endif  // KINRES_SIM_MODEL_H_
