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

#include "kinres/core/clip_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kinres/core/error.h"

namespace kinres {
namespace {

using nlohmann::json;

void AppendVec(std::string& out, std::string_view key, const auto& v) {
  out += '"';
  out += key;
  out += "\":[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += FormatReal(v[i]);
  }
  out += ']';
}

void AppendQuat(std::string& out, std::string_view key,
                const UnitQuaternion& q) {
  AppendVec(out, key, q.Coeffs());
}

std::string Quoted(std::string_view s) { return json(std::string(s)).dump(); }

class RecordReader {
 public:
  RecordReader(const json& j, std::string where)
      : j_(j), where_(std::move(where)) {}

  [[noreturn]] void Fail(const std::string& msg) const {
    throw ParseError(fmt::format("{}: {}", where_, msg));
  }

  const json& At(const char* key) const {
    auto it = j_.find(key);
    if (it == j_.end()) Fail(fmt::format("missing key '{}'", key));
    return *it;
  }
  bool Has(const char* key) const { return j_.contains(key); }

  double Real(const json& v, const char* key) const {
    if (!v.is_number()) Fail(fmt::format("'{}' must be numeric", key));
    return v.get<double>();
  }

  VecX Vector(const char* key, int expected = -1) const {
    return VectorOf(At(key), key, expected);
  }
  VecX VectorOf(const json& v, const char* key, int expected) const {
    if (!v.is_array()) Fail(fmt::format("'{}' must be an array", key));
    if (expected >= 0 && static_cast<int>(v.size()) != expected) {
      Fail(fmt::format("'{}' has {} entries, expected {}", key, v.size(),
                       expected));
    }
    VecX out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out[i] = Real(v[i], key);
    return out;
  }
  Vec3 Vector3(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) Fail(fmt::format("missing key '{}'", key));
    return VectorOf(*it, key, 3);
  }
  UnitQuaternion Quat(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) Fail(fmt::format("missing key '{}'", key));
    const VecX q = VectorOf(*it, key, 4);
    try {
      return UnitQuaternion::FromComponents(q[0], q[1], q[2], q[3]);
    } catch (const ValidationError& e) {
      Fail(fmt::format("'{}': {}", key, e.what()));
    }
  }

  const json& raw() const { return j_; }

 private:
  const json& j_;
  std::string where_;
};

}  // namespace

std::string FormatReal(double v) {
  if (!std::isfinite(v)) {
    throw ValidationError("cannot serialize a non-finite number");
  }
  return fmt::format("{:.17g}", v);
}

void WriteClip(const MotionClip& clip, std::ostream& out) {
  clip.Validate();
  std::string line;
  line += "{\"type\":\"header\",\"version\":1,\"frame_rate\":";
  line += FormatReal(clip.frame_rate);
  line += fmt::format(",\"dof_count\":{},\"action\":", clip.dof());
  line += Quoted(ActionName(clip.action));
  line += ",\"joint_names\":[";
  for (size_t i = 0; i < clip.joint_names.size(); ++i) {
    if (i) line += ',';
    line += Quoted(clip.joint_names[i]);
  }
  line += "],\"object_ids\":[";
  for (size_t i = 0; i < clip.object_ids.size(); ++i) {
    if (i) line += ',';
    line += Quoted(clip.object_ids[i]);
  }
  line += "]}\n";
  out << line;

  for (int t = 0; t < clip.num_frames(); ++t) {
    const Frame& f = clip.frames[t];
    line.clear();
    line += fmt::format("{{\"type\":\"frame\",\"index\":{},", t);
    AppendVec(line, "root_pos", f.pose.root_pos);
    line += ',';
    AppendQuat(line, "root_rot", f.pose.root_rot);
    line += ',';
    AppendVec(line, "joints", f.pose.joint_angles);
    line += ',';
    AppendVec(line, "root_lin", f.vel.root_lin);
    line += ',';
    AppendVec(line, "root_ang", f.vel.root_ang);
    line += ',';
    AppendVec(line, "joint_vel", f.vel.joint_vel);
    line += ",\"objects\":[";
    for (size_t i = 0; i < f.objects.size(); ++i) {
      const ObjectState& o = f.objects[i];
      if (i) line += ',';
      line += "{\"id\":" + Quoted(o.object_id) + ',';
      AppendVec(line, "pos", o.pose.translation);
      line += ',';
      AppendQuat(line, "rot", o.pose.rotation);
      line += ',';
      AppendVec(line, "lin_vel", o.lin_vel);
      line += ',';
      AppendVec(line, "ang_vel", o.ang_vel);
      line += '}';
    }
    line += ']';
    if (f.head) {
      line += ",\"head\":{";
      AppendVec(line, "pos", f.head->pos);
      line += ',';
      AppendQuat(line, "rot", f.head->rot);
      line += ',';
      AppendVec(line, "lin_vel", f.head->lin_vel_world);
      line += ',';
      AppendVec(line, "ang_vel", f.head->ang_vel_world);
      line += '}';
    }
    line += "}\n";
    out << line;
  }
}

void SaveClip(const MotionClip& clip, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  WriteClip(clip, out);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

MotionClip ReadClip(std::istream& in, const std::string& source) {
  MotionClip clip;
  std::string line;
  int line_no = 0;
  int dof = -1;
  bool have_header = false;
  bool all_velocities = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(
          fmt::format("{}:{}: invalid JSON: {}", source, line_no, e.what()));
    }
    if (!j.is_object()) {
      throw ParseError(fmt::format("{}:{}: record must be an object", source, line_no));
    }
    const std::string type = j.value("type", "");
    if (!have_header) {
      RecordReader r(j, fmt::format("{}:{} (header)", source, line_no));
      if (type != "header") r.Fail("first record must be the header");
      clip.frame_rate = r.Real(r.At("frame_rate"), "frame_rate");
      if (!r.At("dof_count").is_number_integer()) r.Fail("'dof_count' must be an integer");
      dof = r.At("dof_count").get<int>();
      try {
        clip.action = ParseAction(j.value("action", "other"));
      } catch (const ValidationError& e) {
        r.Fail(e.what());
      }
      for (const json& n : r.At("joint_names")) clip.joint_names.push_back(n.get<std::string>());
      if (j.contains("object_ids")) {
        for (const json& n : j["object_ids"]) clip.object_ids.push_back(n.get<std::string>());
      }
      if (static_cast<int>(clip.joint_names.size()) != dof) {
        r.Fail(fmt::format("{} joint names for dof_count {}", clip.joint_names.size(), dof));
      }
      have_header = true;
      continue;
    }

    const int index = clip.num_frames();
    RecordReader r(j, fmt::format("{}:{} (frame {})", source, line_no, index));
    if (type != "frame") r.Fail(fmt::format("unexpected record type '{}'", type));
    if (j.contains("index") && j["index"] != index) {
      r.Fail(fmt::format("frame index {} out of sequence", j["index"].dump()));
    }
    Frame f;
    f.pose.root_pos = r.Vector3(j, "root_pos");
    f.pose.root_rot = r.Quat(j, "root_rot");
    f.pose.joint_angles = r.Vector("joints");
    if (f.pose.dof() != dof) {
      r.Fail(fmt::format("joint count {} does not match dof_count {}", f.pose.dof(), dof));
    }
    if (r.Has("root_lin") && r.Has("root_ang") && r.Has("joint_vel")) {
      f.vel.root_lin = r.Vector3(j, "root_lin");
      f.vel.root_ang = r.Vector3(j, "root_ang");
      f.vel.joint_vel = r.Vector("joint_vel", dof);
    } else {
      all_velocities = false;
      f.vel = Velocity::Zero(dof);
    }
    if (j.contains("objects")) {
      for (const json& o : j["objects"]) {
        ObjectState s;
        if (!o.contains("id") || !o["id"].is_string()) r.Fail("object without string 'id'");
        s.object_id = o["id"].get<std::string>();
        s.pose.translation = r.Vector3(o, "pos");
        s.pose.rotation = r.Quat(o, "rot");
        if (o.contains("lin_vel") && o.contains("ang_vel")) {
          s.lin_vel = r.Vector3(o, "lin_vel");
          s.ang_vel = r.Vector3(o, "ang_vel");
        } else {
          all_velocities = false;
        }
        f.objects.push_back(std::move(s));
      }
    }
    if (j.contains("head")) {
      const json& h = j["head"];
      const Vec3 ang = h.contains("ang_vel") ? r.Vector3(h, "ang_vel") : Vec3::Zero();
      f.head = HeadSample::Make(r.Vector3(h, "pos"), r.Quat(h, "rot"),
                                r.Vector3(h, "lin_vel"), ang);
    }
    clip.frames.push_back(std::move(f));
  }
  if (!have_header) throw ParseError(fmt::format("{}: missing header record", source));
  try {
    if (!all_velocities) clip = FiniteDifferenceVelocities(std::move(clip));
    clip.Validate();
  } catch (const ValidationError& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
  return clip;
}

MotionClip LoadClip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open motion clip '{}'", path.string()));
  return ReadClip(in, path.string());
}

}  // namespace kinres
