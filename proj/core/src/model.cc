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

#include "kinres/sim/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kinres/core/error.h"
#include "kinres/sim/kinematics.h"

namespace kinres::sim {
namespace {

using nlohmann::json;

Link MakeLink(std::string name, int parent, Vec3 offset, std::vector<Hinge> hinges,
              double mass, Vec3 com, Geom geom) {
  Link l;
  l.name = std::move(name);
  l.parent = parent;
  l.joint_offset = offset;
  l.hinges = std::move(hinges);
  l.mass = mass;
  l.com = com;
  l.geom = geom;
  l.inertia = GeomInertia(geom, mass);
  return l;
}

Hinge MakeHinge(std::string name, Vec3 axis, double lower, double upper,
                double kp, double kd, double armature) {
  return {std::move(name), axis, lower, upper, kp, kd, armature};
}

Geom Capsule(double radius, double half_length, Vec3 pos) {
  return {GeomType::kCapsule, Vec3(radius, half_length, 0.0),
          Transform::Translation(pos)};
}

json Vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json Quat(const UnitQuaternion& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Vec3 ReadVec(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(fmt::format("{}: expected a 3-vector", where));
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion ReadQuat(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw ParseError(fmt::format("{}: expected a quaternion [w,x,y,z]", where));
  }
  return UnitQuaternion::Normalize(j[0].get<double>(), j[1].get<double>(),
                                   j[2].get<double>(), j[3].get<double>());
}

std::string_view GeomName(GeomType t) {
  switch (t) {
    case GeomType::kSphere:
      return "sphere";
    case GeomType::kCapsule:
      return "capsule";
    case GeomType::kBox:
      return "box";
  }
  return "sphere";
}

GeomType ParseGeom(const std::string& s, const std::string& where) {
  if (s == "sphere") return GeomType::kSphere;
  if (s == "capsule") return GeomType::kCapsule;
  if (s == "box") return GeomType::kBox;
  throw ParseError(fmt::format("{}: unknown geometry '{}'", where, s));
}

json SiteJson(const HumanoidModel& m, const Site& s) {
  return {{"name", s.name}, {"link", m.links[s.link].name}, {"offset", Vec(s.offset)}};
}

}  // namespace

double Geom::BoundingRadius() const {
  switch (type) {
    case GeomType::kSphere:
      return size.x();
    case GeomType::kCapsule:
      return size.x() + size.y();
    case GeomType::kBox:
      return size.norm();
  }
  return 0.0;
}

Vec3 GeomInertia(const Geom& geom, double mass) {
  switch (geom.type) {
    case GeomType::kSphere: {
      const double i = 0.4 * mass * geom.size.x() * geom.size.x();
      return Vec3::Constant(i);
    }
    case GeomType::kCapsule: {
      // Solid cylinder spanning the full capsule length.
      const double r = geom.size.x();
      const double len = 2.0 * (geom.size.y() + r);
      const double ixx = mass * (3.0 * r * r + len * len) / 12.0;
      return {ixx, ixx, 0.5 * mass * r * r};
    }
    case GeomType::kBox: {
      const Vec3 e = 2.0 * geom.size;
      return {mass * (e.y() * e.y() + e.z() * e.z()) / 12.0,
              mass * (e.x() * e.x() + e.z() * e.z()) / 12.0,
              mass * (e.x() * e.x() + e.y() * e.y()) / 12.0};
    }
  }
  return Vec3::Ones();
}

int HumanoidModel::dof() const {
  int n = 0;
  for (const Link& l : links) n += static_cast<int>(l.hinges.size());
  return n;
}

std::vector<int> HumanoidModel::DofOffsets() const {
  std::vector<int> out;
  int n = 0;
  for (const Link& l : links) {
    out.push_back(n);
    n += static_cast<int>(l.hinges.size());
  }
  return out;
}

std::vector<std::string> HumanoidModel::DofNames() const {
  std::vector<std::string> out;
  for (const Link& l : links) {
    for (const Hinge& h : l.hinges) out.push_back(h.name);
  }
  return out;
}

namespace {
template <typename F>
VecX Collect(const HumanoidModel& m, F f) {
  VecX out(m.dof());
  int j = 0;
  for (const Link& l : m.links) {
    for (const Hinge& h : l.hinges) out[j++] = f(h);
  }
  return out;
}
}  // namespace

VecX HumanoidModel::LowerLimits() const {
  return Collect(*this, [](const Hinge& h) { return h.lower; });
}
VecX HumanoidModel::UpperLimits() const {
  return Collect(*this, [](const Hinge& h) { return h.upper; });
}
VecX HumanoidModel::Kp() const {
  return Collect(*this, [](const Hinge& h) { return h.kp; });
}
VecX HumanoidModel::Kd() const {
  return Collect(*this, [](const Hinge& h) { return h.kd; });
}

double HumanoidModel::TotalMass() const {
  double m = 0.0;
  for (const Link& l : links) m += l.mass;
  return m;
}

int HumanoidModel::LinkIndex(const std::string& n) const {
  for (size_t i = 0; i < links.size(); ++i) {
    if (links[i].name == n) return static_cast<int>(i);
  }
  return -1;
}

bool HumanoidModel::IsFoot(int link) const {
  return std::find(foot_links.begin(), foot_links.end(), links[link].name) !=
         foot_links.end();
}

VecX HumanoidModel::Clamp(const VecX& q) const {
  if (q.size() != dof()) {
    throw ValidationError(
        fmt::format("joint vector has {} entries, model has {} DoF", q.size(), dof()));
  }
  return q.cwiseMax(LowerLimits()).cwiseMin(UpperLimits());
}

void HumanoidModel::Validate() const {
  if (links.empty()) throw ValidationError(fmt::format("model '{}' has no links", name));
  std::set<std::string> names;
  std::set<std::string> dof_names;
  for (size_t i = 0; i < links.size(); ++i) {
    const Link& l = links[i];
    if (!names.insert(l.name).second) {
      throw ValidationError(fmt::format("duplicate link name '{}'", l.name));
    }
    if (i == 0 && l.parent != -1) {
      throw ValidationError("the first link must be the root (parent -1)");
    }
    if (i > 0 && (l.parent < 0 || l.parent >= static_cast<int>(i))) {
      throw ValidationError(fmt::format(
          "link '{}' must have a parent listed before it (tree order, no cycles)",
          l.name));
    }
    if (i == 0 && !l.hinges.empty()) {
      throw ValidationError("the root link cannot carry hinges");
    }
    if (!(l.mass > 0.0)) {
      throw ValidationError(fmt::format("link '{}' mass must be positive", l.name));
    }
    if (!(l.inertia.minCoeff() > 0.0)) {
      throw ValidationError(fmt::format("link '{}' inertia must be positive", l.name));
    }
    for (const Hinge& h : l.hinges) {
      if (!dof_names.insert(h.name).second) {
        throw ValidationError(fmt::format("duplicate DoF name '{}'", h.name));
      }
      if (!(h.kp > 0.0) || !(h.kd >= 0.0)) {
        throw ValidationError(
            fmt::format("DoF '{}' needs kp > 0 and kd >= 0", h.name));
      }
      if (h.lower > h.upper) {
        throw ValidationError(fmt::format("DoF '{}' has lower > upper", h.name));
      }
      if (h.axis.norm() == 0.0) {
        throw ValidationError(fmt::format("DoF '{}' has a zero axis", h.name));
      }
    }
  }
  auto check_site = [&](const Site& s) {
    if (s.link < 0 || s.link >= num_links()) {
      throw ValidationError(fmt::format("site '{}' references a missing link", s.name));
    }
  };
  for (const Site& s : end_effectors) check_site(s);
  check_site(head);
  for (const std::string& f : foot_links) {
    if (LinkIndex(f) < 0) {
      throw ValidationError(fmt::format("foot link '{}' does not exist", f));
    }
  }
}

HumanoidModel MiniHumanoid() {
  HumanoidModel m;
  m.name = "mini-humanoid";
  const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY(), z = Vec3::UnitZ();

  m.links.push_back(MakeLink("pelvis", -1, Vec3::Zero(), {}, 7.0, Vec3::Zero(),
                             {GeomType::kSphere, Vec3(0.11, 0, 0), {}}));
  m.links.push_back(MakeLink(
      "torso", 0, Vec3(0, 0, 0.08),
      {MakeHinge("waist_roll", x, -0.6, 0.6, 800, 80, 0.05),
       MakeHinge("waist_pitch", y, -0.5, 1.3, 800, 80, 0.05)},
      18.0, Vec3(0, 0, 0.25), Capsule(0.12, 0.2, Vec3(0, 0, 0.28))));
  for (int side = 0; side < 2; ++side) {
    const std::string s = side == 0 ? "l" : "r";
    const double sy = side == 0 ? 1.0 : -1.0;
    const double roll_lo = side == 0 ? -0.3 : -1.6;
    const double roll_hi = side == 0 ? 1.6 : 0.3;
    m.links.push_back(MakeLink(
        "arm_" + s, 1, Vec3(0, sy * 0.19, 0.40),
        {MakeHinge("shoulder_" + s + "_pitch", y, -3.0, 1.2, 80, 8, 0.02),
         MakeHinge("shoulder_" + s + "_roll", x, roll_lo, roll_hi, 80, 8, 0.02)},
        2.5, Vec3(0, 0, -0.25), Capsule(0.045, 0.21, Vec3(0, 0, -0.27))));
  }
  for (int side = 0; side < 2; ++side) {
    const std::string s = side == 0 ? "l" : "r";
    const double sy = side == 0 ? 1.0 : -1.0;
    const double roll_lo = side == 0 ? -0.5 : -0.8;
    const double roll_hi = side == 0 ? 0.8 : 0.5;
    const int thigh = m.num_links();
    m.links.push_back(MakeLink(
        "thigh_" + s, 0, Vec3(0, sy * 0.1, -0.05),
        {MakeHinge("hip_" + s + "_roll", x, roll_lo, roll_hi, 1000, 100, 0.05),
         MakeHinge("hip_" + s + "_pitch", y, -2.2, 0.6, 1000, 100, 0.05),
         MakeHinge("hip_" + s + "_yaw", z, -0.8, 0.8, 500, 50, 0.05)},
        6.0, Vec3(0, 0, -0.2), Capsule(0.07, 0.14, Vec3(0, 0, -0.21))));
    m.links.push_back(MakeLink(
        "shin_" + s, thigh, Vec3(0, 0, -0.42),
        {MakeHinge("knee_" + s, y, -0.05, 2.6, 1000, 100, 0.05)}, 3.0,
        Vec3(0, 0, -0.2), Capsule(0.05, 0.14, Vec3(0, 0, -0.2))));
    m.links.push_back(MakeLink(
        "foot_" + s, thigh + 1, Vec3(0, 0, -0.41),
        {MakeHinge("ankle_" + s, y, -0.9, 0.9, 800, 80, 0.02)}, 1.0,
        Vec3(0.01, 0, -0.04),
        {GeomType::kBox, Vec3(0.11, 0.05, 0.035),
         Transform::Translation(Vec3(0.01, 0, -0.04))}));
    m.foot_links.push_back("foot_" + s);
  }
  m.end_effectors = {{"foot_l", m.LinkIndex("foot_l"), Vec3(0.01, 0, -0.075)},
                     {"foot_r", m.LinkIndex("foot_r"), Vec3(0.01, 0, -0.075)},
                     {"hand_l", m.LinkIndex("arm_l"), Vec3(0, 0, -0.55)},
                     {"hand_r", m.LinkIndex("arm_r"), Vec3(0, 0, -0.55)},
                     {"head", m.LinkIndex("torso"), Vec3(0, 0, 0.48)}};
  m.head = {"head", m.LinkIndex("torso"), Vec3(0, 0, 0.48)};
  m.Validate();
  return m;
}

HumanoidModel Pendulum(double mass, double length, double kp, double kd) {
  HumanoidModel m;
  m.name = "pendulum";
  m.fixed_base = true;
  m.base = Transform::Translation(Vec3(0, 0, 2.0));
  m.links.push_back(MakeLink("base", -1, Vec3::Zero(), {}, 0.1, Vec3::Zero(),
                             {GeomType::kSphere, Vec3(0.02, 0, 0), {}}));
  Link pole = MakeLink(
      "pole", 0, Vec3::Zero(),
      {MakeHinge("swing", Vec3::UnitY(), -3.1, 3.1, kp, kd, 0.0)}, mass,
      Vec3(0, 0, -length),
      {GeomType::kSphere, Vec3(0.05, 0, 0), Transform::Translation(Vec3(0, 0, -length))});
  pole.inertia = Vec3::Constant(0.4 * mass * 0.05 * 0.05);
  m.links.push_back(pole);
  m.end_effectors = {{"tip", 1, Vec3(0, 0, -length)}};
  m.head = {"tip", 1, Vec3(0, 0, -length)};
  m.Validate();
  return m;
}

double GroundedRootHeight(const HumanoidModel& model, const Pose& pose) {
  Pose p = pose;
  p.root_pos.z() = 0.0;
  const auto links = LinkTransforms(model, p);
  double lowest = std::numeric_limits<double>::infinity();
  for (int b = 0; b < model.num_links(); ++b) {
    if (!model.foot_links.empty() && !model.IsFoot(b)) continue;
    for (const GeomSphere& s : GeomSpheres(model.links[b].geom, links[b], false)) {
      lowest = std::min(lowest, s.center.z() - s.radius);
    }
  }
  return -lowest;
}

std::string ModelToJson(const HumanoidModel& m) {
  json j;
  j["name"] = m.name;
  j["fixed_base"] = m.fixed_base;
  j["base"] = {{"pos", Vec(m.base.translation)}, {"rot", Quat(m.base.rotation)}};
  json links = json::array();
  for (const Link& l : m.links) {
    json hinges = json::array();
    for (const Hinge& h : l.hinges) {
      hinges.push_back({{"name", h.name}, {"axis", Vec(h.axis)}, {"lower", h.lower},
                        {"upper", h.upper}, {"kp", h.kp}, {"kd", h.kd},
                        {"armature", h.armature}});
    }
    links.push_back({{"name", l.name},
                     {"parent", l.parent < 0 ? json(nullptr) : json(m.links[l.parent].name)},
                     {"joint_offset", Vec(l.joint_offset)},
                     {"hinges", hinges},
                     {"mass", l.mass},
                     {"inertia", Vec(l.inertia)},
                     {"com", Vec(l.com)},
                     {"geom",
                      {{"type", GeomName(l.geom.type)},
                       {"size", Vec(l.geom.size)},
                       {"pos", Vec(l.geom.local.translation)},
                       {"rot", Quat(l.geom.local.rotation)}}}});
  }
  j["links"] = links;
  json ee = json::array();
  for (const Site& s : m.end_effectors) ee.push_back(SiteJson(m, s));
  j["end_effectors"] = ee;
  j["head"] = SiteJson(m, m.head);
  j["foot_links"] = m.foot_links;
  return j.dump(2);
}

HumanoidModel ModelFromJson(const std::string& text, const std::string& source) {
  HumanoidModel m;
  try {
    const json j = json::parse(text);
    m.name = j.value("name", "model");
    m.fixed_base = j.value("fixed_base", false);
    if (j.contains("base")) {
      m.base.translation = ReadVec(j["base"].at("pos"), source + " base.pos");
      m.base.rotation = ReadQuat(j["base"].at("rot"), source + " base.rot");
    }
    for (const json& lj : j.at("links")) {
      Link l;
      l.name = lj.at("name").get<std::string>();
      const std::string where = fmt::format("{} link '{}'", source, l.name);
      if (lj.contains("parent") && !lj["parent"].is_null()) {
        l.parent = m.LinkIndex(lj["parent"].get<std::string>());
        if (l.parent < 0) {
          throw ParseError(fmt::format("{}: parent must be declared before the link", where));
        }
      }
      l.joint_offset = ReadVec(lj.value("joint_offset", json::array({0, 0, 0})), where);
      for (const json& hj : lj.value("hinges", json::array())) {
        Hinge h;
        h.name = hj.at("name").get<std::string>();
        h.axis = ReadVec(hj.at("axis"), where);
        h.lower = hj.value("lower", h.lower);
        h.upper = hj.value("upper", h.upper);
        h.kp = hj.at("kp").get<double>();
        h.kd = hj.at("kd").get<double>();
        h.armature = hj.value("armature", h.armature);
        l.hinges.push_back(h);
      }
      l.mass = lj.at("mass").get<double>();
      l.com = ReadVec(lj.value("com", json::array({0, 0, 0})), where);
      const json& gj = lj.at("geom");
      l.geom.type = ParseGeom(gj.at("type").get<std::string>(), where);
      l.geom.size = ReadVec(gj.at("size"), where);
      l.geom.local.translation = ReadVec(gj.value("pos", json::array({0, 0, 0})), where);
      if (gj.contains("rot")) l.geom.local.rotation = ReadQuat(gj["rot"], where);
      l.inertia = lj.contains("inertia") ? ReadVec(lj["inertia"], where)
                                         : GeomInertia(l.geom, l.mass);
      m.links.push_back(l);
    }
    auto read_site = [&](const json& sj) {
      Site s;
      s.name = sj.at("name").get<std::string>();
      s.link = m.LinkIndex(sj.at("link").get<std::string>());
      s.offset = ReadVec(sj.value("offset", json::array({0, 0, 0})), source);
      return s;
    };
    for (const json& sj : j.value("end_effectors", json::array())) {
      m.end_effectors.push_back(read_site(sj));
    }
    m.head = read_site(j.at("head"));
    m.foot_links = j.value("foot_links", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
  try {
    m.Validate();
  } catch (const ValidationError& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
  return m;
}

HumanoidModel LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open model file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ModelFromJson(ss.str(), path.string());
}

void SaveModel(const HumanoidModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write model file '{}'", path.string()));
  out << ModelToJson(model) << '\n';
}

}  // namespace kinres::sim
