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

#include "kinres/sim/kinematics.h"

#include <fmt/format.h>

#include "kinres/core/error.h"

namespace kinres::sim {

std::vector<Transform> LinkTransforms(const HumanoidModel& model,
                                      const Pose& pose) {
  if (pose.dof() != model.dof()) {
    throw ValidationError(fmt::format("pose has {} joint angles, model {} has {}",
                                      pose.dof(), model.name, model.dof()));
  }
  std::vector<Transform> out(model.links.size());
  int j = 0;
  for (size_t b = 0; b < model.links.size(); ++b) {
    const Link& link = model.links[b];
    Transform frame;
    if (link.parent < 0) {
      frame = model.fixed_base ? model.base : pose.RootTransform();
    } else {
      const Transform& pf = out[link.parent];
      frame = {pf.rotation, pf.Apply(link.joint_offset)};
    }
    for (const Hinge& h : link.hinges) {
      frame.rotation =
          frame.rotation * UnitQuaternion::FromAxisAngle(h.axis, pose.joint_angles[j++]);
    }
    out[b] = frame;
  }
  return out;
}

std::vector<UnitQuaternion> JointGroupRotations(const HumanoidModel& model,
                                                const VecX& joint_angles) {
  std::vector<UnitQuaternion> out;
  int j = 0;
  for (size_t b = 1; b < model.links.size(); ++b) {
    const Link& link = model.links[b];
    if (link.hinges.empty()) continue;
    UnitQuaternion q;
    for (const Hinge& h : link.hinges) {
      q = q * UnitQuaternion::FromAxisAngle(h.axis, joint_angles[j++]);
    }
    out.push_back(q);
  }
  return out;
}

Vec3 SitePosition(const std::vector<Transform>& links, const Site& site) {
  return links[site.link].Apply(site.offset);
}

std::vector<Vec3> EndEffectorPositions(const HumanoidModel& model,
                                       const Pose& pose) {
  const auto links = LinkTransforms(model, pose);
  std::vector<Vec3> out;
  out.reserve(model.end_effectors.size());
  for (const Site& s : model.end_effectors) out.push_back(SitePosition(links, s));
  return out;
}

std::vector<Vec3> KeypointPositions(const HumanoidModel& model,
                                    const Pose& pose) {
  const auto links = LinkTransforms(model, pose);
  std::vector<Vec3> out;
  for (size_t b = 0; b < links.size(); ++b) out.push_back(links[b].translation);
  for (const Site& s : model.end_effectors) out.push_back(SitePosition(links, s));
  return out;
}

std::vector<std::string> KeypointNames(const HumanoidModel& model) {
  std::vector<std::string> out;
  for (const Link& l : model.links) out.push_back(l.name);
  for (const Site& s : model.end_effectors) out.push_back(s.name);
  return out;
}

std::vector<GeomSphere> GeomSpheres(const Geom& geom, const Transform& owner,
                                    bool with_midpoint) {
  const Transform tf = owner * geom.local;
  std::vector<GeomSphere> out;
  switch (geom.type) {
    case GeomType::kSphere:
      out.push_back({tf.translation, geom.size.x()});
      break;
    case GeomType::kCapsule: {
      const Vec3 half = tf.rotation.Rotate(Vec3(0, 0, geom.size.y()));
      out.push_back({tf.translation + half, geom.size.x()});
      out.push_back({tf.translation - half, geom.size.x()});
      if (with_midpoint) out.push_back({tf.translation, geom.size.x()});
      break;
    }
    case GeomType::kBox:
      for (int i = 0; i < 8; ++i) {
        const Vec3 c((i & 1) ? geom.size.x() : -geom.size.x(),
                     (i & 2) ? geom.size.y() : -geom.size.y(),
                     (i & 4) ? geom.size.z() : -geom.size.z());
        out.push_back({tf.Apply(c), 0.0});
      }
      break;
  }
  return out;
}

}  // namespace kinres::sim
