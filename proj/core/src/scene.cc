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

#include "kinres/sim/scene.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kinres/core/error.h"

namespace kinres::sim {
namespace {

using nlohmann::json;

json Vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json Quat(const UnitQuaternion& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Vec3 ReadVec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion ReadQuat(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("expected [w,x,y,z]");
  return UnitQuaternion::Normalize(j[0].get<double>(), j[1].get<double>(),
                                   j[2].get<double>(), j[3].get<double>());
}

}  // namespace

Vec3 SceneObject::Inertia() const {
  // Mass split by volume; parallel-axis shift to the object origin, which is
  // taken as the centre of mass.
  double volume = 0.0;
  for (const BoxPart& p : parts) volume += 8.0 * p.half_extents.prod();
  Mat3 total = Mat3::Zero();
  for (const BoxPart& p : parts) {
    const double m = mass * 8.0 * p.half_extents.prod() / volume;
    const Vec3 e = 2.0 * p.half_extents;
    const Vec3 local(m * (e.y() * e.y() + e.z() * e.z()) / 12.0,
                     m * (e.x() * e.x() + e.z() * e.z()) / 12.0,
                     m * (e.x() * e.x() + e.y() * e.y()) / 12.0);
    const Mat3 r = p.local.rotation.ToMatrix();
    const Vec3& c = p.local.translation;
    total += r * local.asDiagonal() * r.transpose() +
             m * (c.squaredNorm() * Mat3::Identity() - c * c.transpose());
  }
  return total.diagonal();
}

void SceneObject::Validate() const {
  if (object_id.empty()) throw ValidationError("scene object without an id");
  if (parts.empty()) {
    throw ValidationError(fmt::format("object '{}' has no geometry", object_id));
  }
  if (!is_static && !(mass > 0.0)) {
    throw ValidationError(
        fmt::format("dynamic object '{}' needs a positive mass", object_id));
  }
  if (!(friction >= 0.0)) {
    throw ValidationError(fmt::format("object '{}' friction must be >= 0", object_id));
  }
  if (initial.object_id != object_id) {
    throw ValidationError(
        fmt::format("object '{}' initial state carries id '{}'", object_id,
                    initial.object_id));
  }
}

int Scene::ObjectIndex(const std::string& id) const {
  for (size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].object_id == id) return static_cast<int>(i);
  }
  return -1;
}

void Scene::Validate() const {
  for (size_t i = 0; i < objects.size(); ++i) {
    objects[i].Validate();
    for (size_t k = 0; k < i; ++k) {
      if (objects[k].object_id == objects[i].object_id) {
        throw ValidationError(
            fmt::format("duplicate object id '{}'", objects[i].object_id));
      }
    }
  }
}

std::vector<ObjectState> Scene::InitialObjects() const {
  std::vector<ObjectState> out;
  for (const SceneObject& o : objects) out.push_back(o.initial);
  return out;
}

SceneObject MakeBoxObject(const std::string& id, const Transform& pose,
                          const Vec3& half_extents, double mass,
                          double friction) {
  SceneObject o;
  o.object_id = id;
  o.kind = "box";
  o.parts = {{Transform::Identity(), half_extents}};
  o.mass = mass;
  o.friction = friction;
  o.initial = {id, pose, Vec3::Zero(), Vec3::Zero()};
  return o;
}

SceneObject MakeChair(const std::string& id, const Transform& pose) {
  SceneObject o;
  o.object_id = id;
  o.kind = "chair";
  o.is_static = true;
  o.mass = 8.0;
  o.friction = 0.8;
  // Solid seat block from the floor to 0.42 m, backrest behind it.
  o.parts = {{Transform::Translation(Vec3(0, 0, 0.21)), Vec3(0.22, 0.24, 0.21)},
             {Transform::Translation(Vec3(-0.25, 0, 0.72)), Vec3(0.03, 0.24, 0.27)}};
  o.initial = {id, pose, Vec3::Zero(), Vec3::Zero()};
  return o;
}

SceneObject MakeObstacle(const std::string& id, const Transform& pose) {
  SceneObject o;
  o.object_id = id;
  o.kind = "obstacle";
  o.is_static = true;
  o.mass = 20.0;
  o.friction = 0.6;
  o.parts = {{Transform::Translation(Vec3(0, 0, 0.5)), Vec3(0.2, 0.2, 0.5)}};
  o.initial = {id, pose, Vec3::Zero(), Vec3::Zero()};
  return o;
}

std::string SceneToJson(const Scene& scene) {
  json j;
  j["ground"] = scene.ground;
  json objs = json::array();
  for (const SceneObject& o : scene.objects) {
    json parts = json::array();
    for (const BoxPart& p : o.parts) {
      parts.push_back({{"pos", Vec(p.local.translation)},
                       {"rot", Quat(p.local.rotation)},
                       {"half_extents", Vec(p.half_extents)}});
    }
    objs.push_back({{"id", o.object_id},
                    {"kind", o.kind},
                    {"static", o.is_static},
                    {"mass", o.mass},
                    {"friction", o.friction},
                    {"parts", parts},
                    {"pose",
                     {{"pos", Vec(o.initial.pose.translation)},
                      {"rot", Quat(o.initial.pose.rotation)},
                      {"lin_vel", Vec(o.initial.lin_vel)},
                      {"ang_vel", Vec(o.initial.ang_vel)}}}});
  }
  j["objects"] = objs;
  return j.dump(2);
}

Scene SceneFromJson(const std::string& text, const std::string& source) {
  Scene s;
  try {
    const json j = json::parse(text);
    s.ground = j.value("ground", true);
    for (const json& oj : j.value("objects", json::array())) {
      SceneObject o;
      o.object_id = oj.at("id").get<std::string>();
      o.kind = oj.value("kind", "box");
      o.is_static = oj.value("static", false);
      o.mass = oj.value("mass", o.mass);
      o.friction = oj.value("friction", o.friction);
      for (const json& pj : oj.at("parts")) {
        BoxPart p;
        p.local.translation = ReadVec(pj.value("pos", json::array({0, 0, 0})));
        if (pj.contains("rot")) p.local.rotation = ReadQuat(pj["rot"]);
        p.half_extents = ReadVec(pj.at("half_extents"));
        o.parts.push_back(p);
      }
      o.initial.object_id = o.object_id;
      if (oj.contains("pose")) {
        const json& pj = oj["pose"];
        o.initial.pose.translation = ReadVec(pj.at("pos"));
        if (pj.contains("rot")) o.initial.pose.rotation = ReadQuat(pj["rot"]);
        if (pj.contains("lin_vel")) o.initial.lin_vel = ReadVec(pj["lin_vel"]);
        if (pj.contains("ang_vel")) o.initial.ang_vel = ReadVec(pj["ang_vel"]);
      }
      s.objects.push_back(std::move(o));
    }
    s.Validate();
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  } catch (const ValidationError& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
  return s;
}

Scene LoadScene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open scene file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return SceneFromJson(ss.str(), path.string());
}

void SaveScene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write scene file '{}'", path.string()));
  out << SceneToJson(scene) << '\n';
}

}  // namespace kinres::sim
