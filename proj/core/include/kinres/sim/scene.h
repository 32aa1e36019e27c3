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

#ifndef KINRES_SIM_SCENE_H_
#define KINRES_SIM_SCENE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "kinres/core/motion_clip.h"

namespace kinres::sim {

struct BoxPart {
  Transform local;
  Vec3 half_extents = Vec3::Constant(0.25);
};

// Rigid object assembled from boxes. Static objects never move.
struct SceneObject {
  std::string object_id;
  std::string kind = "box";  // box | chair | obstacle
  std::vector<BoxPart> parts;
  bool is_static = false;
  double mass = 10.0;
  double friction = 0.6;
  ObjectState initial;

  Vec3 Inertia() const;  // principal moments of the assembled boxes
  void Validate() const;
};

struct Scene {
  bool ground = true;
  std::vector<SceneObject> objects;

  int ObjectIndex(const std::string& id) const;  // -1 when absent
  void Validate() const;
  // Initial object states in scene order.
  std::vector<ObjectState> InitialObjects() const;
};

SceneObject MakeBoxObject(const std::string& id, const Transform& pose,
                          const Vec3& half_extents = Vec3(0.25, 0.3, 0.3),
                          double mass = 10.0, double friction = 0.5);
// Seat top at 0.42 m, backrest along -x of the chair frame.
SceneObject MakeChair(const std::string& id, const Transform& pose);
SceneObject MakeObstacle(const std::string& id, const Transform& pose);

Scene LoadScene(const std::filesystem::path& path);
void SaveScene(const Scene& scene, const std::filesystem::path& path);
std::string SceneToJson(const Scene& scene);
Scene SceneFromJson(const std::string& text,
                    const std::string& source = "<scene>");

}  // namespace kinres::sim

#endif  // KINRES_SIM_SCENE_H_
